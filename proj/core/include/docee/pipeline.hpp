#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "docee/backbone.hpp"
#include "docee/detection.hpp"
#include "docee/extraction.hpp"
#include "docee/memory.hpp"

namespace docee {

// Injectable decision overrides for inference. Each hook may return a value
// to replace the model's decision at that point (the corresponding model
// computation is skipped), or nullopt to defer to the model. Used by tests to
// drive the extraction loop with gold-derived choices, checking the control
// flow independently of the numerics.
struct DecisionHooks {
  // Round counts from 0. true = another event of this type remains.
  std::function<std::optional<bool>(int type, int round)> detect;
  // Sentence index in [0, n_sentences]; n_sentences selects the null target.
  std::function<std::optional<int>(int type, int round, int role, int n_sentences)>
      locate;
  // Char indices (copy order, no STOP) within the located sentence; empty
  // means the role stays unfilled.
  std::function<std::optional<std::vector<int>>(int type, int round, int role,
                                                int sentence)>
      copy;
};

struct RoleTrace {
  bool filled = false;
  int sentence = -1;            // located sentence (n_sentences = null target)
  std::vector<int> copied;      // char indices in copy order
  bool by_stop = false;
};

struct RecordTrace {
  int type_index = -1;
  int round = -1;
  bool kept = false;  // false when every role came back unfilled
  std::vector<RoleTrace> roles;
};

struct ExtractionOutput {
  std::string doc_id;
  std::vector<EventRecord> records;       // grouped by type in schema order
  std::vector<RecordTrace> traces;        // one per positive detection
  std::vector<int> detection_calls;      // per type
  std::vector<int> positive_detections;  // per type
  double seconds = 0.0;
};

// Full inference over one document: per type, detect-extract rounds until the
// detector declines or max_rounds positive detections, per role sentence
// location + character copying, memory append after every filled role.
// Records with zero filled roles are dropped (but still traced).
ExtractionOutput extract_document(const Document& doc, const Vocabulary& vocab,
                                  const EventSchema& schema, const ModelParams& params,
                                  double threshold, int max_rounds,
                                  const DecisionHooks* hooks = nullptr);

// Worker-pool map of extract_document over a corpus; order preserved.
// n_workers < 1 means one worker per available core.
std::vector<ExtractionOutput> extract_corpus(const std::vector<Document>& docs,
                                             const Vocabulary& vocab,
                                             const EventSchema& schema,
                                             const ModelParams& params,
                                             double threshold, int max_rounds,
                                             int n_workers = 1);

struct TrainConfig {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 0.9;
  double lr = 1e-3;
  int epochs = 10;
  int batch_size = 4;
  uint64_t seed = 0;
  double threshold = 0.5;
  int max_rounds = 8;
};

double total_loss(double l_rr, double l_sl, double l_ae, const TrainConfig& cfg);

// Teacher-forced loss of one document on the caller's tape. Detection rounds
// follow the gold schedule (one positive round per gold record in canonical
// order, then one negative); the memory is fed gold arguments as they are
// consumed; sentence-location and copy losses use gold indices as targets.
struct LossParts {
  Var total;
  double l_rr = 0.0;
  double l_sl = 0.0;
  double l_ae = 0.0;
  double l_all = 0.0;
};

LossParts document_loss(Graph& g, const AnnotatedDoc& adoc, const Vocabulary& vocab,
                        const EventSchema& schema, const ModelParams& params,
                        const TrainConfig& cfg);

struct StepStats {
  double l_rr = 0.0;
  double l_sl = 0.0;
  double l_ae = 0.0;
  double l_all = 0.0;  // batch means
  int64_t step = 0;
};

// Adam over the ParamStore. One step = batch-mean gradients of document_loss,
// then a single parameter update. Throws NumericError on non-finite losses or
// gradients.
class Trainer {
 public:
  Trainer(ModelParams& params, TrainConfig cfg);

  StepStats step(const std::vector<const AnnotatedDoc*>& batch,
                 const Vocabulary& vocab, const EventSchema& schema);

  int64_t step_count() const { return t_; }
  const std::vector<Mat>& adam_m() const { return m_; }
  const std::vector<Mat>& adam_v() const { return v_; }
  // Resume support: restores the step counter and moment estimates.
  void restore(int64_t step, std::vector<Mat> m, std::vector<Mat> v);

 private:
  ModelParams* params_;
  TrainConfig cfg_;
  int64_t t_ = 0;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
};

}  // namespace docee
