#pragma once

#include <utility>
#include <vector>

#include "docee/memory.hpp"

namespace docee {

// Redundancy gate: g = sigmoid([m_hat ; s] W_l), output s - s*g, shrinking
// sentence directions already covered by the memory. Single row variant;
// gate_sentences applies the same gate to every row of an N x d sentence
// matrix against one shared memory summary. With use_redundancy_gate off both
// return their input unchanged.
Var redundancy_gate(Graph& g, Var m_hat, Var sentence_row, const ModelParams& params);
Var gate_sentences(Graph& g, Var m_hat, Var sent_rows, const ModelParams& params);

// Scored sentence choice for one role. scores is 1 x (N+1) after softmax when
// with_null (row N is the learned null-sentence target meaning "unfilled");
// 1 x N in the no-null test mode. chosen uses the lowest-index argmax.
struct SentenceLocation {
  Var scores;
  int chosen = -1;
  int n_sentences = 0;
  bool is_null() const { return chosen == n_sentences; }
};

SentenceLocation locate_sentence(Graph& g, Var query, Var sent_rows,
                                 const ModelParams& params, bool with_null = true);

// Copy surface for one located sentence: char rows plus the query (when
// use_query_enrichment), then the raw role embedding appended as the STOP row.
Var prepare_sentence(Graph& g, Var char_rows, int n_valid, Var query, Var role_emb,
                     const ModelParams& params);

struct CopyTrace {
  std::vector<int> indices;           // copied char positions, in copy order
  bool terminated_by_stop = false;
  std::vector<Var> step_scores;       // 1 x (n+1) softmax per step
};

// Greedy argmax copy walk: start from the query, follow selected rows, stop
// on the STOP row or after n+1 copied characters (hard cap).
CopyTrace copy_argument(Graph& g, Var query, Var prepared, int n_valid);

// Teacher-forced copy: steps are the gold char indices followed by the STOP
// index (n_valid); each step's NLL is summed and the walk follows the gold row
// regardless of the argmax.
Var forced_copy_loss(Graph& g, Var query, Var prepared,
                     const std::vector<int>& gold_steps);

// Argument vector: elementwise max over the ORIGINAL char rows at the copied
// indices (enriched rows serve only the attention walk).
Var argument_repr(Graph& g, const CopyTrace& trace, Var original_char_rows);
Var argument_repr_at(Graph& g, const std::vector<int>& indices, Var original_char_rows);

// Summed negative log-likelihood of gold sentence indices (clamped logs).
Var location_loss(Graph& g, const std::vector<std::pair<Var, int>>& located);

}  // namespace docee
