#include "docee/extraction.hpp"

#include <cmath>
#include <stdexcept>

namespace docee {

Var redundancy_gate(Graph& g, Var m_hat, Var sentence_row, const ModelParams& params) {
  if (!params.config().use_redundancy_gate) return sentence_row;
  Var gate = g.sigmoid(g.matmul(g.concat_cols({m_hat, sentence_row}), g.param(params.w_l)));
  return g.sub(sentence_row, g.cmul(sentence_row, gate));
}

Var gate_sentences(Graph& g, Var m_hat, Var sent_rows, const ModelParams& params) {
  if (!params.config().use_redundancy_gate) return sent_rows;
  const int n = g.rows(sent_rows);
  Var m_rep = g.repeat_rows(m_hat, n);
  Var gate = g.sigmoid(g.matmul(g.concat_cols({m_rep, sent_rows}), g.param(params.w_l)));
  return g.sub(sent_rows, g.cmul(sent_rows, gate));
}

SentenceLocation locate_sentence(Graph& g, Var query, Var sent_rows,
                                 const ModelParams& params, bool with_null) {
  SentenceLocation loc;
  loc.n_sentences = g.rows(sent_rows);
  Var targets = with_null
                    ? g.concat_rows({sent_rows, g.param(params.null_sentence)})
                    : sent_rows;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.config().d));
  Var logits = g.scale(g.matmul_nt(query, targets), inv_sqrt_d);
  loc.scores = g.softmax_rows(logits);
  loc.chosen = argmax_lowest(g.value(loc.scores));
  return loc;
}

Var prepare_sentence(Graph& g, Var char_rows, int n_valid, Var query, Var role_emb,
                     const ModelParams& params) {
  if (n_valid < 1 || n_valid > g.rows(char_rows))
    throw std::invalid_argument("prepare_sentence: bad valid char count");
  Var chars = n_valid == g.rows(char_rows) ? char_rows
                                           : g.pick_rows(char_rows, [&] {
                                               std::vector<int> idx(n_valid);
                                               for (int i = 0; i < n_valid; ++i) idx[i] = i;
                                               return idx;
                                             }());
  Var enriched = params.config().use_query_enrichment
                     ? g.add_rowwise(chars, query)
                     : chars;
  return g.concat_rows({enriched, role_emb});
}

namespace {

Var copy_step_scores(Graph& g, Var v, Var prepared, int d) {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  return g.softmax_rows(g.scale(g.matmul_nt(v, prepared), inv_sqrt_d));
}

}  // namespace

CopyTrace copy_argument(Graph& g, Var query, Var prepared, int n_valid) {
  const int stop_index = g.rows(prepared) - 1;
  if (n_valid != stop_index)
    throw std::invalid_argument("copy_argument: prepared rows must be n_valid + 1");
  CopyTrace trace;
  Var v = query;
  const int d = g.cols(prepared);
  // At most n+1 characters get copied; one extra iteration would only ever
  // re-confirm the cap, so the loop bound is exactly n+1.
  for (int t = 0; t <= n_valid; ++t) {
    Var scores = copy_step_scores(g, v, prepared, d);
    trace.step_scores.push_back(scores);
    const int k = argmax_lowest(g.value(scores));
    if (k == stop_index) {
      trace.terminated_by_stop = true;
      break;
    }
    trace.indices.push_back(k);
    v = g.row(prepared, k);
  }
  return trace;
}

Var forced_copy_loss(Graph& g, Var query, Var prepared,
                     const std::vector<int>& gold_steps) {
  const int stop_index = g.rows(prepared) - 1;
  if (gold_steps.empty() || gold_steps.back() != stop_index)
    throw std::invalid_argument("forced_copy_loss: steps must end at the STOP index");
  const int d = g.cols(prepared);
  std::vector<Var> terms;
  Var v = query;
  for (int target : gold_steps) {
    if (target < 0 || target > stop_index)
      throw std::invalid_argument("forced_copy_loss: step index out of range");
    Var scores = copy_step_scores(g, v, prepared, d);
    terms.push_back(g.nll_from_probs(scores, target));
    if (target != stop_index) v = g.row(prepared, target);
  }
  return g.add_scalars(terms);
}

Var argument_repr_at(Graph& g, const std::vector<int>& indices, Var original_char_rows) {
  if (indices.empty())
    throw std::invalid_argument("argument_repr: empty copy trace has no representation");
  return g.max_over_rows(g.pick_rows(original_char_rows, indices));
}

Var argument_repr(Graph& g, const CopyTrace& trace, Var original_char_rows) {
  return argument_repr_at(g, trace.indices, original_char_rows);
}

Var location_loss(Graph& g, const std::vector<std::pair<Var, int>>& located) {
  std::vector<Var> terms;
  terms.reserve(located.size());
  for (const auto& [scores, gold] : located) terms.push_back(g.nll_from_probs(scores, gold));
  return g.add_scalars(terms);
}

}  // namespace docee
