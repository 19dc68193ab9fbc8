#include "docee/detection.hpp"

namespace docee {

DetectionResult detect_event(Graph& g, Var doc_vec, const MemoryTensor& m,
                             const ModelParams& params) {
  DetectionResult res;
  if (params.config().use_detection_memory) {
    Var m_hat = summarize_memory(g, m, params);
    res.redundancy_aware_doc = g.sub(doc_vec, m_hat);
  } else {
    res.redundancy_aware_doc = doc_vec;
  }
  Var e_type = type_embedding(g, m.event_type, params);
  Var hidden = g.tanh(g.add(g.matmul(res.redundancy_aware_doc, g.param(params.w_d)),
                            g.matmul(e_type, g.param(params.w_t))));
  res.p = g.sigmoid(g.matmul(hidden, g.param(params.w_s)));
  res.prob = g.scalar(res.p);
  return res;
}

Var detection_loss(Graph& g, const std::vector<std::pair<Var, int>>& rounds) {
  std::vector<Var> terms;
  terms.reserve(rounds.size());
  for (const auto& [p, label] : rounds) terms.push_back(g.bce_from_prob(p, label));
  return g.add_scalars(terms);
}

}  // namespace docee
