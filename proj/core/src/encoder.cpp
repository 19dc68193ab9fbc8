#include "docee/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace docee {

Var run_encoder(Graph& g, Var x, int valid_rows, const EncoderIds& enc, int d) {
  const int L = g.rows(x);
  if (g.cols(x) != d) throw std::invalid_argument("run_encoder: input width != d");
  if (valid_rows < 1 || valid_rows > L)
    throw std::invalid_argument("run_encoder: valid_rows out of range");
  if (enc.cfg.n_layers == 0) return x;

  // Padding rows are cut off before the first layer and replaced by zero rows
  // afterwards. Running the stack on the tight matrix makes the valid outputs
  // bitwise identical to an unpadded run (the accumulation order of every
  // product is the same, which masking alone cannot guarantee), and no
  // garbage in padding rows can leak into scores or gradients.
  if (valid_rows < L) {
    std::vector<int> valid_idx(valid_rows);
    for (int i = 0; i < valid_rows; ++i) valid_idx[i] = i;
    x = g.pick_rows(x, valid_idx);
  }

  if (enc.cfg.positions) x = g.add(x, g.constant(positional_encoding(valid_rows, d)));

  const int n_heads = enc.cfg.n_heads;
  const int dk = d / n_heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  for (const LayerIds& lyr : enc.layers) {
    Var q = g.add_rowwise(g.matmul(x, g.param(lyr.wq)), g.param(lyr.bq));
    Var k = g.add_rowwise(g.matmul(x, g.param(lyr.wk)), g.param(lyr.bk));
    Var v = g.add_rowwise(g.matmul(x, g.param(lyr.wv)), g.param(lyr.bv));

    std::vector<Var> heads;
    heads.reserve(n_heads);
    for (int h = 0; h < n_heads; ++h) {
      Var qh = g.slice_cols(q, h * dk, dk);
      Var kh = g.slice_cols(k, h * dk, dk);
      Var vh = g.slice_cols(v, h * dk, dk);
      Var scores = g.scale(g.matmul_nt(qh, kh), inv_sqrt_dk);
      heads.push_back(g.matmul(g.softmax_rows(scores), vh));
    }
    Var attn = g.add_rowwise(g.matmul(g.concat_cols(heads), g.param(lyr.wo)),
                             g.param(lyr.bo));
    x = g.layer_norm(g.add(x, attn), g.param(lyr.ln1_g), g.param(lyr.ln1_b));

    Var hidden = g.relu(g.add_rowwise(g.matmul(x, g.param(lyr.w1)), g.param(lyr.b1)));
    Var ffn = g.add_rowwise(g.matmul(hidden, g.param(lyr.w2)), g.param(lyr.b2));
    x = g.layer_norm(g.add(x, ffn), g.param(lyr.ln2_g), g.param(lyr.ln2_b));
  }

  if (valid_rows < L) x = g.concat_rows({x, g.zeros(L - valid_rows, d)});
  return x;
}

}  // namespace docee
