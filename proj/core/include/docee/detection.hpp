#pragma once

#include <utility>
#include <vector>

#include "docee/memory.hpp"

namespace docee {

// One detection round: does another unextracted event of this memory's type
// remain in the document?
struct DetectionResult {
  Var p;                     // 1 x 1 probability on the tape
  Var redundancy_aware_doc;  // 1 x d, document minus summarized memory
  double prob = 0.0;         // value of p, for threshold decisions
};

// p = sigmoid(w_s . tanh(doc_hat W_d + e_type W_t)) with
// doc_hat = doc - summarize_memory(m); with use_detection_memory off the
// subtraction is skipped and doc_hat = doc.
DetectionResult detect_event(Graph& g, Var doc_vec, const MemoryTensor& m,
                             const ModelParams& params);

// Summed (not averaged) binary cross-entropy over the document's detection
// rounds; probabilities clamped to [1e-7, 1 - 1e-7].
Var detection_loss(Graph& g, const std::vector<std::pair<Var, int>>& rounds);

}  // namespace docee
