#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "docee/corpus.hpp"
#include "docee/graph.hpp"
#include "docee/types.hpp"

namespace docee {

// One self-attention encoder stack. n_layers = 0 is a first-class identity
// mode used by hand-computable tests.
struct EncoderConfig {
  int n_layers = 2;
  int n_heads = 4;
  int ffn_mult = 4;
  bool positions = true;
};

struct ModelConfig {
  int d = 64;
  EncoderConfig sentence_enc{2, 4, 4, true};
  EncoderConfig document_enc{2, 4, 4, true};
  EncoderConfig memory_enc{2, 4, 4, false};
  SizeCaps caps;

  // Component switches (all on for the full model). Turning one off removes
  // the corresponding term from the computation, for ablation experiments.
  bool use_detection_memory = true;   // subtract summarized memory from D
  bool use_redundancy_gate = true;    // gate sentence reprs before location
  bool use_memory_query = true;       // build the role query through the memory
  bool use_query_enrichment = true;   // add the query into char rows for copying

  void validate() const;  // throws std::invalid_argument
};

// Parameter ids of one encoder layer inside the ParamStore.
struct LayerIds {
  int wq = -1, bq = -1, wk = -1, bk = -1, wv = -1, bv = -1, wo = -1, bo = -1;
  int ln1_g = -1, ln1_b = -1;
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
  int ln2_g = -1, ln2_b = -1;
};

struct EncoderIds {
  EncoderConfig cfg;
  std::vector<LayerIds> layers;
};

// All trainable arrays for one model, flat in a ParamStore plus the ids that
// give them structure. Construction registers and initializes every array
// from a seeded uniform(-1/sqrt(d), 1/sqrt(d)) draw (biases and layer-norm
// shifts zero, layer-norm scales one).
class ModelParams {
 public:
  ModelParams(const ModelConfig& cfg, const EventSchema& schema,
              const Vocabulary& vocab, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  int n_types() const { return n_types_; }
  int n_roles(int type_index) const { return n_roles_.at(type_index); }
  int vocab_size() const { return vocab_size_; }
  uint64_t vocab_hash() const { return vocab_hash_; }
  uint64_t schema_hash() const { return schema_hash_; }

  // Embedding tables.
  int char_embed = -1;          // |V| x d
  int type_embed = -1;          // T x d, one row per event type
  std::vector<int> role_embed;  // per type: R_t x d

  // Detection head (row-vector convention: stored as right-multipliers).
  int w_d = -1;  // d x d
  int w_t = -1;  // d x d
  int w_s = -1;  // d x 1

  int w_l = -1;           // 2d x d, redundancy gate
  int null_sentence = -1;  // 1 x d, "role unfilled" location target

  EncoderIds sentence_enc;
  EncoderIds document_enc;
  EncoderIds memory_enc;

 private:
  ModelConfig cfg_;
  ParamStore store_;
  int n_types_ = 0;
  std::vector<int> n_roles_;
  int vocab_size_ = 0;
  uint64_t vocab_hash_ = 0;
  uint64_t schema_hash_ = 0;
};

// Serialized model state. `values` follows the ParamStore registration order
// of the ModelParams that wrote it; adam_m/adam_v are empty when the file
// carries no optimizer state.
struct Checkpoint {
  ModelConfig config;
  int n_types = 0;
  std::vector<int> n_roles;
  int vocab_size = 0;
  uint64_t vocab_hash = 0;
  uint64_t schema_hash = 0;
  std::vector<char32_t> vocab_chars;  // full vocabulary, so extraction needs no corpus
  int64_t step = 0;
  std::vector<std::string> names;
  std::vector<Mat> values;
  std::vector<Mat> adam_m;
  std::vector<Mat> adam_v;
};

// Binary container: magic + JSON header + raw little-endian doubles.
// save -> load -> save reproduces the file byte for byte.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& vocab, int64_t step,
                     const std::vector<Mat>* adam_m = nullptr,
                     const std::vector<Mat>* adam_v = nullptr);
Checkpoint read_checkpoint(const std::string& path);  // throws DataError

Vocabulary vocab_from_checkpoint(const Checkpoint& ckpt);

// Rebuilds ModelParams from a checkpoint, refusing on vocabulary/schema hash
// mismatch or any name/shape disagreement.
ModelParams params_from_checkpoint(const Checkpoint& ckpt,
                                   const EventSchema& schema,
                                   const Vocabulary& vocab);

}  // namespace docee
