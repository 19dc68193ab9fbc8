#include "docee/memory.hpp"

#include <stdexcept>

#include "docee/encoder.hpp"

namespace docee {

Var type_embedding(Graph& g, int type_index, const ModelParams& params) {
  if (type_index < 0 || type_index >= params.n_types())
    throw std::invalid_argument("type index out of range");
  return g.param_rows(params.type_embed, {type_index});
}

Var role_embedding(Graph& g, int type_index, int role_index, const ModelParams& params) {
  if (type_index < 0 || type_index >= params.n_types())
    throw std::invalid_argument("type index out of range");
  if (role_index < 0 || role_index >= params.n_roles(type_index))
    throw std::invalid_argument("role index out of range");
  return g.param_rows(params.role_embed[type_index], {role_index});
}

MemoryTensor init_memory(Graph& g, int type_index, const ModelParams& params) {
  MemoryTensor m;
  m.event_type = type_index;
  m.rows.push_back(type_embedding(g, type_index, params));
  return m;
}

Var summarize_memory(Graph& g, const MemoryTensor& m, const ModelParams& params) {
  if (m.rows.empty()) throw std::invalid_argument("summarize_memory: empty memory");
  Var stacked = g.concat_rows(m.rows);
  Var encoded = run_encoder(g, stacked, g.rows(stacked), params.memory_enc,
                            params.config().d);
  return g.sum_over_rows(encoded);
}

Var build_query(Graph& g, int role_index, const MemoryTensor& m,
                const ModelParams& params) {
  Var role = role_embedding(g, m.event_type, role_index, params);
  if (!params.config().use_memory_query) return role;
  std::vector<Var> rows;
  rows.reserve(m.rows.size() + 1);
  rows.push_back(role);
  for (Var r : m.rows) rows.push_back(r);
  Var stacked = g.concat_rows(rows);
  Var encoded = run_encoder(g, stacked, g.rows(stacked), params.memory_enc,
                            params.config().d);
  return g.row(encoded, 0);
}

MemoryTensor update_memory(Graph& g, const MemoryTensor& m, Var arg_repr,
                           Var located_sentence_repr) {
  MemoryTensor out = m;
  out.rows.push_back(g.add(arg_repr, located_sentence_repr));
  return out;
}

}  // namespace docee
