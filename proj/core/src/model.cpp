#include "docee/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace docee {

using nlohmann::json;

void ModelConfig::validate() const {
  if (d < 1) throw std::invalid_argument("model dimension must be >= 1");
  for (const EncoderConfig* e : {&sentence_enc, &document_enc, &memory_enc}) {
    if (e->n_layers < 0) throw std::invalid_argument("encoder layer count must be >= 0");
    if (e->n_layers > 0) {
      if (e->n_heads < 1) throw std::invalid_argument("encoder head count must be >= 1");
      if (d % e->n_heads != 0)
        throw std::invalid_argument("head count must divide the model dimension");
      if (e->ffn_mult < 1) throw std::invalid_argument("feed-forward multiplier must be >= 1");
    }
  }
  if (caps.max_sentences < 1 || caps.max_sentence_len < 1)
    throw std::invalid_argument("size caps must be >= 1");
}

namespace {

class Init {
 public:
  Init(ParamStore& store, uint64_t seed, double range)
      : store_(store), rng_(seed), range_(range) {}

  int uniform(const std::string& name, int rows, int cols) {
    std::uniform_real_distribution<double> dist(-range_, range_);
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m(r, c) = dist(rng_);
    }
    return store_.add(name, std::move(m));
  }

  int zeros(const std::string& name, int rows, int cols) {
    return store_.add(name, Mat::Zero(rows, cols));
  }

  int ones(const std::string& name, int rows, int cols) {
    return store_.add(name, Mat::Ones(rows, cols));
  }

 private:
  ParamStore& store_;
  std::mt19937_64 rng_;
  double range_;
};

EncoderIds init_encoder(Init& init, const std::string& prefix, const EncoderConfig& ec, int d) {
  EncoderIds ids;
  ids.cfg = ec;
  for (int l = 0; l < ec.n_layers; ++l) {
    const std::string p = prefix + ".l" + std::to_string(l) + ".";
    LayerIds lyr;
    lyr.wq = init.uniform(p + "wq", d, d);
    lyr.bq = init.zeros(p + "bq", 1, d);
    lyr.wk = init.uniform(p + "wk", d, d);
    lyr.bk = init.zeros(p + "bk", 1, d);
    lyr.wv = init.uniform(p + "wv", d, d);
    lyr.bv = init.zeros(p + "bv", 1, d);
    lyr.wo = init.uniform(p + "wo", d, d);
    lyr.bo = init.zeros(p + "bo", 1, d);
    lyr.ln1_g = init.ones(p + "ln1_g", 1, d);
    lyr.ln1_b = init.zeros(p + "ln1_b", 1, d);
    lyr.w1 = init.uniform(p + "w1", d, ec.ffn_mult * d);
    lyr.b1 = init.zeros(p + "b1", 1, ec.ffn_mult * d);
    lyr.w2 = init.uniform(p + "w2", ec.ffn_mult * d, d);
    lyr.b2 = init.zeros(p + "b2", 1, d);
    lyr.ln2_g = init.ones(p + "ln2_g", 1, d);
    lyr.ln2_b = init.zeros(p + "ln2_b", 1, d);
    ids.layers.push_back(lyr);
  }
  return ids;
}

json encoder_config_json(const EncoderConfig& e) {
  return json{{"n_layers", e.n_layers},
              {"n_heads", e.n_heads},
              {"ffn_mult", e.ffn_mult},
              {"positions", e.positions}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig e;
  e.n_layers = j.at("n_layers").get<int>();
  e.n_heads = j.at("n_heads").get<int>();
  e.ffn_mult = j.at("ffn_mult").get<int>();
  e.positions = j.at("positions").get<bool>();
  return e;
}

json model_config_json(const ModelConfig& c) {
  return json{{"d", c.d},
              {"sentence_enc", encoder_config_json(c.sentence_enc)},
              {"document_enc", encoder_config_json(c.document_enc)},
              {"memory_enc", encoder_config_json(c.memory_enc)},
              {"max_sentences", c.caps.max_sentences},
              {"max_sentence_len", c.caps.max_sentence_len},
              {"use_detection_memory", c.use_detection_memory},
              {"use_redundancy_gate", c.use_redundancy_gate},
              {"use_memory_query", c.use_memory_query},
              {"use_query_enrichment", c.use_query_enrichment}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.d = j.at("d").get<int>();
  c.sentence_enc = encoder_config_from_json(j.at("sentence_enc"));
  c.document_enc = encoder_config_from_json(j.at("document_enc"));
  c.memory_enc = encoder_config_from_json(j.at("memory_enc"));
  c.caps.max_sentences = j.at("max_sentences").get<int>();
  c.caps.max_sentence_len = j.at("max_sentence_len").get<int>();
  c.use_detection_memory = j.at("use_detection_memory").get<bool>();
  c.use_redundancy_gate = j.at("use_redundancy_gate").get<bool>();
  c.use_memory_query = j.at("use_memory_query").get<bool>();
  c.use_query_enrichment = j.at("use_query_enrichment").get<bool>();
  return c;
}

std::string hash_hex(uint64_t h) {
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

uint64_t hash_from_hex(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

}  // namespace

ModelParams::ModelParams(const ModelConfig& cfg, const EventSchema& schema,
                         const Vocabulary& vocab, uint64_t seed)
    : cfg_(cfg) {
  cfg.validate();
  n_types_ = schema.n_types();
  for (int t = 0; t < n_types_; ++t)
    n_roles_.push_back(static_cast<int>(schema.roles(t).size()));
  vocab_size_ = vocab.size();
  vocab_hash_ = vocab.hash();
  schema_hash_ = schema.hash();

  const int d = cfg.d;
  Init init(store_, seed, 1.0 / std::sqrt(static_cast<double>(d)));

  char_embed = init.uniform("char_embed", vocab_size_, d);
  type_embed = init.uniform("type_embed", n_types_, d);
  for (int t = 0; t < n_types_; ++t) {
    role_embed.push_back(init.uniform("role_embed.t" + std::to_string(t), n_roles_[t], d));
  }
  w_d = init.uniform("detect.w_d", d, d);
  w_t = init.uniform("detect.w_t", d, d);
  w_s = init.uniform("detect.w_s", d, 1);
  w_l = init.uniform("gate.w_l", 2 * d, d);
  null_sentence = init.uniform("null_sentence", 1, d);
  sentence_enc = init_encoder(init, "sent_enc", cfg.sentence_enc, d);
  document_enc = init_encoder(init, "doc_enc", cfg.document_enc, d);
  memory_enc = init_encoder(init, "mem_enc", cfg.memory_enc, d);
}

namespace {

constexpr char kMagic[8] = {'D', 'C', 'E', 'E', 'C', 'K', 'P', '1'};

void write_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw DataError("checkpoint truncated while reading a length field");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_matrix(std::ostream& os, const Mat& m) {
  // Row-major stream of IEEE doubles. Eigen stores column-major, so walk rows.
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      static_assert(sizeof(double) == 8);
      char buf[8];
      std::memcpy(buf, &v, 8);
      os.write(buf, 8);
    }
  }
}

Mat read_matrix(std::istream& is, int rows, int cols) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      char buf[8];
      is.read(buf, 8);
      if (!is) throw DataError("checkpoint truncated inside a parameter array");
      double v;
      std::memcpy(&v, buf, 8);
      m(r, c) = v;
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& vocab, int64_t step,
                     const std::vector<Mat>* adam_m,
                     const std::vector<Mat>* adam_v) {
  const ParamStore& store = params.store();
  const bool with_opt = adam_m != nullptr && adam_v != nullptr;
  if (with_opt && (static_cast<int>(adam_m->size()) != store.size() ||
                   static_cast<int>(adam_v->size()) != store.size()))
    throw std::invalid_argument("optimizer state size does not match parameter count");
  if (vocab.hash() != params.vocab_hash())
    throw std::invalid_argument("vocabulary does not match the model's vocab hash");

  json header;
  header["config"] = model_config_json(params.config());
  header["n_types"] = params.n_types();
  json roles = json::array();
  for (int t = 0; t < params.n_types(); ++t) roles.push_back(params.n_roles(t));
  header["n_roles"] = roles;
  header["vocab_size"] = params.vocab_size();
  header["vocab_hash"] = hash_hex(params.vocab_hash());
  header["schema_hash"] = hash_hex(params.schema_hash());
  json chars = json::array();
  for (char32_t c : vocab.chars()) chars.push_back(static_cast<uint32_t>(c));
  header["vocab_chars"] = chars;
  header["step"] = step;
  header["has_opt_state"] = with_opt;
  json plist = json::array();
  for (int pid = 0; pid < store.size(); ++pid) {
    const Mat& m = store.value(pid);
    plist.push_back(json{{"name", store.name(pid)},
                         {"rows", static_cast<int>(m.rows())},
                         {"cols", static_cast<int>(m.cols())}});
  }
  header["params"] = plist;
  const std::string header_bytes = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_u64(os, header_bytes.size());
  os.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
  for (int pid = 0; pid < store.size(); ++pid) write_matrix(os, store.value(pid));
  if (with_opt) {
    for (const Mat& m : *adam_m) write_matrix(os, m);
    for (const Mat& m : *adam_v) write_matrix(os, m);
  }
  os.flush();
  if (!os) throw DataError("write failure while saving checkpoint: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[sizeof(kMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path);
  const uint64_t hlen = read_u64(is);
  std::string header_bytes(hlen, '\0');
  is.read(header_bytes.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw DataError("checkpoint truncated inside the header");

  json header;
  try {
    header = json::parse(header_bytes);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.config = model_config_from_json(header.at("config"));
    ckpt.n_types = header.at("n_types").get<int>();
    ckpt.n_roles = header.at("n_roles").get<std::vector<int>>();
    ckpt.vocab_size = header.at("vocab_size").get<int>();
    ckpt.vocab_hash = hash_from_hex(header.at("vocab_hash").get<std::string>());
    ckpt.schema_hash = hash_from_hex(header.at("schema_hash").get<std::string>());
    for (const json& c : header.at("vocab_chars"))
      ckpt.vocab_chars.push_back(static_cast<char32_t>(c.get<uint32_t>()));
    ckpt.step = header.at("step").get<int64_t>();
    for (const json& p : header.at("params")) {
      ckpt.names.push_back(p.at("name").get<std::string>());
      ckpt.values.push_back(
          read_matrix(is, p.at("rows").get<int>(), p.at("cols").get<int>()));
    }
    if (header.at("has_opt_state").get<bool>()) {
      for (const json& p : header.at("params"))
        ckpt.adam_m.push_back(
            read_matrix(is, p.at("rows").get<int>(), p.at("cols").get<int>()));
      for (const json& p : header.at("params"))
        ckpt.adam_v.push_back(
            read_matrix(is, p.at("rows").get<int>(), p.at("cols").get<int>()));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header missing or mistyped field: ") + e.what());
  }
  return ckpt;
}

Vocabulary vocab_from_checkpoint(const Checkpoint& ckpt) {
  Vocabulary vocab(ckpt.vocab_chars);
  if (vocab.hash() != ckpt.vocab_hash)
    throw DataError("checkpoint vocabulary is internally inconsistent (hash mismatch)");
  return vocab;
}

ModelParams params_from_checkpoint(const Checkpoint& ckpt, const EventSchema& schema,
                                   const Vocabulary& vocab) {
  if (ckpt.schema_hash != schema.hash())
    throw DataError("checkpoint was trained against a different event schema "
                    "(schema hash mismatch); refusing to load");
  if (ckpt.vocab_hash != vocab.hash())
    throw DataError("checkpoint was trained against a different vocabulary "
                    "(vocab hash mismatch); refusing to load");

  ModelParams params(ckpt.config, schema, vocab, /*seed=*/0);
  ParamStore& store = params.store();
  if (static_cast<size_t>(store.size()) != ckpt.values.size())
    throw DataError("checkpoint parameter count does not match the model layout");
  for (int pid = 0; pid < store.size(); ++pid) {
    if (store.name(pid) != ckpt.names[pid])
      throw DataError("checkpoint parameter order mismatch at '" + ckpt.names[pid] +
                      "' (expected '" + store.name(pid) + "')");
    const Mat& v = ckpt.values[pid];
    Mat& dst = store.value(pid);
    if (v.rows() != dst.rows() || v.cols() != dst.cols())
      throw DataError("checkpoint parameter '" + ckpt.names[pid] + "' has the wrong shape");
    dst = v;
  }
  return params;
}

}  // namespace docee
