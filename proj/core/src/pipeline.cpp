#include "docee/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "docee/common.hpp"

namespace docee {

namespace {

// Valid sentence rows as a standalone matrix (drops trailing padding rows).
Var valid_sentences(Graph& g, const EncodedDocument& enc) {
  if (enc.n_sentences == g.rows(enc.sent_mat)) return enc.sent_mat;
  std::vector<int> idx(enc.n_sentences);
  for (int i = 0; i < enc.n_sentences; ++i) idx[i] = i;
  return g.pick_rows(enc.sent_mat, idx);
}

std::string text_at(const std::u32string& sentence, const std::vector<int>& indices) {
  std::u32string picked;
  picked.reserve(indices.size());
  for (int k : indices) picked.push_back(sentence.at(k));
  return utf8_encode(picked);
}

}  // namespace

ExtractionOutput extract_document(const Document& doc, const Vocabulary& vocab,
                                  const EventSchema& schema, const ModelParams& params,
                                  double threshold, int max_rounds,
                                  const DecisionHooks* hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  ExtractionOutput out;
  out.doc_id = doc.doc_id;
  out.detection_calls.assign(schema.n_types(), 0);
  out.positive_detections.assign(schema.n_types(), 0);

  Graph g(&params.store());
  EncodedDoc enc_ids = encode_with_vocab(doc, vocab);
  EncodedDocument enc = encode_document(g, enc_ids, params);
  const int n_sent = enc.n_sentences;
  Var sent_rows = valid_sentences(g, enc);

  for (int type = 0; type < schema.n_types(); ++type) {
    MemoryTensor mem = init_memory(g, type, params);
    const int n_roles = schema.n_roles(type);

    for (int round = 0; round < max_rounds; ++round) {
      ++out.detection_calls[type];
      bool proceed;
      std::optional<bool> forced_detect =
          hooks && hooks->detect ? hooks->detect(type, round) : std::nullopt;
      if (forced_detect.has_value()) {
        proceed = *forced_detect;
      } else {
        proceed = detect_event(g, enc.doc_vec, mem, params).prob > threshold;
      }
      if (!proceed) break;
      ++out.positive_detections[type];

      RecordTrace trace;
      trace.type_index = type;
      trace.round = round;
      EventRecord rec;
      rec.type_index = type;
      rec.args.assign(n_roles, std::nullopt);

      for (int role = 0; role < n_roles; ++role) {
        RoleTrace rt;
        std::optional<int> forced_loc =
            hooks && hooks->locate ? hooks->locate(type, round, role, n_sent)
                                   : std::nullopt;
        Var query{};
        bool have_query = false;
        auto ensure_query = [&]() {
          if (!have_query) {
            query = build_query(g, role, mem, params);
            have_query = true;
          }
        };

        int j;
        if (forced_loc.has_value()) {
          j = *forced_loc;
          if (j < 0 || j > n_sent)
            throw std::invalid_argument("locate hook returned an out-of-range index");
        } else {
          ensure_query();
          Var targets = sent_rows;
          if (params.config().use_redundancy_gate) {
            Var m_hat = summarize_memory(g, mem, params);
            targets = gate_sentences(g, m_hat, sent_rows, params);
          }
          j = locate_sentence(g, query, targets, params).chosen;
        }
        rt.sentence = j;
        if (j == n_sent) {  // null target: role stays unfilled
          trace.roles.push_back(rt);
          continue;
        }

        std::vector<int> copied;
        bool by_stop = true;
        std::optional<std::vector<int>> forced_copy =
            hooks && hooks->copy ? hooks->copy(type, round, role, j) : std::nullopt;
        if (forced_copy.has_value()) {
          copied = *forced_copy;
          for (int k : copied) {
            if (k < 0 || k >= enc.char_lens[j])
              throw std::invalid_argument("copy hook returned an out-of-range index");
          }
        } else {
          ensure_query();
          Var prepared = prepare_sentence(g, enc.char_mats[j], enc.char_lens[j], query,
                                          role_embedding(g, type, role, params), params);
          CopyTrace ct = copy_argument(g, query, prepared, enc.char_lens[j]);
          copied = ct.indices;
          by_stop = ct.terminated_by_stop;
        }
        rt.copied = copied;
        rt.by_stop = by_stop;
        if (copied.empty()) {  // immediate STOP: unfilled
          trace.roles.push_back(rt);
          continue;
        }

        rt.filled = true;
        rec.args[role] = text_at(doc.sentences[j], copied);
        Var arg = argument_repr_at(g, copied, enc.char_mats[j]);
        mem = update_memory(g, mem, arg, g.row(enc.sent_mat, j));
        trace.roles.push_back(rt);
      }

      trace.kept = rec.n_filled() > 0;
      if (trace.kept) out.records.push_back(rec);
      out.traces.push_back(std::move(trace));
    }
  }

  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<ExtractionOutput> extract_corpus(const std::vector<Document>& docs,
                                             const Vocabulary& vocab,
                                             const EventSchema& schema,
                                             const ModelParams& params,
                                             double threshold, int max_rounds,
                                             int n_workers) {
  if (n_workers < 1)
    n_workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<ExtractionOutput> outputs(docs.size());
  if (n_workers == 1 || docs.size() <= 1) {
    for (size_t i = 0; i < docs.size(); ++i)
      outputs[i] = extract_document(docs[i], vocab, schema, params, threshold, max_rounds);
    return outputs;
  }

  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= docs.size()) return;
      try {
        outputs[i] =
            extract_document(docs[i], vocab, schema, params, threshold, max_rounds);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return outputs;
}

double total_loss(double l_rr, double l_sl, double l_ae, const TrainConfig& cfg) {
  return cfg.lambda1 * l_rr + cfg.lambda2 * l_sl + cfg.lambda3 * l_ae;
}

LossParts document_loss(Graph& g, const AnnotatedDoc& adoc, const Vocabulary& vocab,
                        const EventSchema& schema, const ModelParams& params,
                        const TrainConfig& cfg) {
  EncodedDoc enc_ids = encode_with_vocab(adoc.doc, vocab);
  EncodedDocument enc = encode_document(g, enc_ids, params);
  const int n_sent = enc.n_sentences;
  Var sent_rows = valid_sentences(g, enc);

  std::vector<std::pair<Var, int>> detection_rounds;
  std::vector<std::pair<Var, int>> located;
  std::vector<Var> copy_terms;

  for (int type = 0; type < schema.n_types(); ++type) {
    const std::vector<GoldRecord> records = canonical_gold_order(adoc.gold, type);
    MemoryTensor mem = init_memory(g, type, params);

    for (const GoldRecord& rec : records) {
      detection_rounds.emplace_back(detect_event(g, enc.doc_vec, mem, params).p, 1);

      for (int role = 0; role < schema.n_roles(type); ++role) {
        const std::optional<GoldArg>& arg = rec.args[role];
        Var query = build_query(g, role, mem, params);
        Var targets = sent_rows;
        if (params.config().use_redundancy_gate) {
          Var m_hat = summarize_memory(g, mem, params);
          targets = gate_sentences(g, m_hat, sent_rows, params);
        }
        SentenceLocation loc = locate_sentence(g, query, targets, params);
        located.emplace_back(loc.scores, arg ? arg->sent : n_sent);
        if (!arg) continue;

        Var prepared = prepare_sentence(g, enc.char_mats[arg->sent],
                                        enc.char_lens[arg->sent], query,
                                        role_embedding(g, type, role, params), params);
        std::vector<int> steps;
        for (int k = arg->start; k < arg->end; ++k) steps.push_back(k);
        steps.push_back(enc.char_lens[arg->sent]);  // STOP
        copy_terms.push_back(forced_copy_loss(g, query, prepared, steps));

        std::vector<int> span(steps.begin(), steps.end() - 1);
        Var arg_repr = argument_repr_at(g, span, enc.char_mats[arg->sent]);
        mem = update_memory(g, mem, arg_repr, g.row(enc.sent_mat, arg->sent));
      }
    }
    detection_rounds.emplace_back(detect_event(g, enc.doc_vec, mem, params).p, 0);
  }

  LossParts parts;
  Var l_rr = detection_loss(g, detection_rounds);
  Var l_sl = location_loss(g, located);
  Var l_ae = g.add_scalars(copy_terms);
  parts.total = g.add_scalars({g.scale(l_rr, cfg.lambda1), g.scale(l_sl, cfg.lambda2),
                               g.scale(l_ae, cfg.lambda3)});
  parts.l_rr = g.scalar(l_rr);
  parts.l_sl = g.scalar(l_sl);
  parts.l_ae = g.scalar(l_ae);
  parts.l_all = g.scalar(parts.total);
  return parts;
}

Trainer::Trainer(ModelParams& params, TrainConfig cfg)
    : params_(&params), cfg_(cfg) {
  const ParamStore& store = params.store();
  for (int pid = 0; pid < store.size(); ++pid) {
    m_.push_back(Mat::Zero(store.value(pid).rows(), store.value(pid).cols()));
    v_.push_back(Mat::Zero(store.value(pid).rows(), store.value(pid).cols()));
  }
}

void Trainer::restore(int64_t step, std::vector<Mat> m, std::vector<Mat> v) {
  if (static_cast<int>(m.size()) != params_->store().size() ||
      static_cast<int>(v.size()) != params_->store().size())
    throw std::invalid_argument("optimizer state size mismatch on restore");
  t_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

StepStats Trainer::step(const std::vector<const AnnotatedDoc*>& batch,
                        const Vocabulary& vocab, const EventSchema& schema) {
  if (batch.empty()) throw std::invalid_argument("training step with an empty batch");
  ParamStore& store = params_->store();
  GradientStore grads(store);
  StepStats stats;

  for (const AnnotatedDoc* adoc : batch) {
    Graph g(&store);
    LossParts parts = document_loss(g, *adoc, vocab, schema, *params_, cfg_);
    if (!std::isfinite(parts.l_all))
      throw NumericError("non-finite training loss on doc " + adoc->doc.doc_id);
    // Each document reduces into its own store first; the batch gradient is
    // then a sum of finished per-document gradients, so identical documents
    // contribute bitwise-identical terms regardless of batch composition.
    GradientStore doc_grads(store);
    g.backward(parts.total, doc_grads);
    grads.add(doc_grads);
    stats.l_rr += parts.l_rr;
    stats.l_sl += parts.l_sl;
    stats.l_ae += parts.l_ae;
    stats.l_all += parts.l_all;
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  grads.scale(inv_n);
  stats.l_rr *= inv_n;
  stats.l_sl *= inv_n;
  stats.l_ae *= inv_n;
  stats.l_all *= inv_n;

  std::string bad;
  if (!grads.all_finite(&bad))
    throw NumericError("non-finite gradient in parameter " + bad);

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (int pid = 0; pid < store.size(); ++pid) {
    if (!grads.touched(pid)) continue;
    const Mat& gr = grads.grad(pid);
    m_[pid] = beta1 * m_[pid] + (1.0 - beta1) * gr;
    v_[pid] = beta2 * v_[pid] + (1.0 - beta2) * gr.cwiseProduct(gr);
    const Mat m_hat = m_[pid] / bc1;
    const Mat v_hat = v_[pid] / bc2;
    store.value(pid) -=
        cfg_.lr * m_hat.cwiseQuotient(v_hat.cwiseSqrt() + Mat::Constant(v_hat.rows(), v_hat.cols(), eps));
  }
  stats.step = t_;
  return stats;
}

}  // namespace docee
