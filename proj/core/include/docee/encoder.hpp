#pragma once

#include "docee/graph.hpp"
#include "docee/model.hpp"

namespace docee {

// Self-attention encoder stack (post-norm residual blocks) over an L x d
// input already on the tape. Rows at index >= valid_rows are padding: they
// are sliced off before layer 0 and come back as zero rows in the output, so
// the valid rows' outputs are bitwise identical to an unpadded run (identical
// accumulation order, not just identical mathematics) and padding rows carry
// no gradient.
// Sinusoidal positions are added before layer 0 when enc.cfg.positions is set.
// n_layers = 0 returns x unchanged (identity mode for hand-checked tests).
Var run_encoder(Graph& g, Var x, int valid_rows, const EncoderIds& enc, int d);

}  // namespace docee
