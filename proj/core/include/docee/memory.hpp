#pragma once

#include <vector>

#include "docee/graph.hpp"
#include "docee/model.hpp"

namespace docee {

// Per-type working memory: row 0 is the event-type embedding, later rows are
// one entry per extracted argument (argument vector + located-sentence
// vector). A value type — updates return a new tensor, so different decoding
// branches and documents never share mutable state.
struct MemoryTensor {
  int event_type = -1;
  std::vector<Var> rows;  // each 1 x d

  int n_args() const { return static_cast<int>(rows.size()) - 1; }
};

// Embedding fetch helpers (1 x d rows on the tape).
Var type_embedding(Graph& g, int type_index, const ModelParams& params);
Var role_embedding(Graph& g, int type_index, int role_index, const ModelParams& params);

// Fresh memory holding only the type embedding.
MemoryTensor init_memory(Graph& g, int type_index, const ModelParams& params);

// Column-wise sum over the memory-encoder output rows -> 1 x d summary.
Var summarize_memory(Graph& g, const MemoryTensor& m, const ModelParams& params);

// Role query: run the memory encoder over [role_embedding ; memory rows] and
// keep the transformed role row. With use_memory_query off, the raw role
// embedding is returned instead (memory ignored).
Var build_query(Graph& g, int role_index, const MemoryTensor& m,
                const ModelParams& params);

// Append one argument entry (arg_repr + located_sentence_repr); pure.
MemoryTensor update_memory(Graph& g, const MemoryTensor& m, Var arg_repr,
                           Var located_sentence_repr);

}  // namespace docee
