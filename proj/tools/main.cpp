// Command-line driver: synthetic data generation, training, extraction and
// scoring for the document-level event record extractor.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>

#include "CLI11.hpp"
#include "docee/corpus.hpp"
#include "docee/evaluation.hpp"
#include "docee/model.hpp"
#include "docee/pipeline.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw docee::DataError("cannot write " + path.string());
  os << text;
}

// Echo of every option's resolved value, written into the output directory so
// a run can be reproduced from its artifacts alone.
void echo_config(CLI::App* sub, const fs::path& out_dir) {
  write_text(out_dir / "resolved_config.txt", sub->config_to_str(true, false));
}

void print_warnings(const docee::LoadStats& stats) {
  for (const std::string& w : stats.warnings) std::cerr << "warning: " << w << "\n";
}

// ---------------------------------------------------------------------------
// config files
//
// A config file is a flat key=value list (one option per line, '#' comments);
// the resolved_config.txt echoed into every output directory feeds back in
// unchanged. File entries are expanded into ordinary command-line tokens
// appended after the given ones, and a key is skipped when its flag already
// appears explicitly — so precedence is command line, then file, then the
// built-in default.

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct ConfigEntry {
  std::string key, value;
};

std::vector<ConfigEntry> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config file " + path);
  std::vector<ConfigEntry> entries;
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line without '=': " + t);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line with empty key: " + t);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key == "config") continue;  // a config file cannot chain-load another
    entries.push_back({key, value});
  }
  return entries;
}

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  for (const std::string& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

void apply_config_file(const CLI::App& app, std::vector<std::string>& args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return;

  const CLI::App* sub = nullptr;
  for (const std::string& a : args) {
    if (!a.empty() && a[0] != '-') {
      sub = app.get_subcommand_no_throw(a);
      break;
    }
  }
  if (sub == nullptr) return;  // missing subcommand is reported by the parser

  for (const ConfigEntry& e : read_config_file(path)) {
    const std::string flag = "--" + e.key;
    if (flag_given(args, flag)) continue;  // explicit flags win
    const CLI::Option* op = sub->get_option_no_throw(flag);
    if (op != nullptr && op->get_expected_min() == 0) {
      // A value-less switch: only a truthy value turns it on.
      if (e.value == "true" || e.value == "1" || e.value == "yes" || e.value == "on") {
        args.push_back(flag);
      } else if (!(e.value == "false" || e.value == "0" || e.value == "no" ||
                   e.value == "off" || e.value.empty())) {
        throw std::invalid_argument("config value for switch " + flag +
                                    " must be boolean, got '" + e.value + "'");
      }
    } else {
      // Unknown keys are appended too; the parser rejects them like any
      // misspelled flag.
      args.push_back(flag);
      args.push_back(e.value);
    }
  }
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string out;
  uint64_t seed = 7;
  docee::SynthConfig synth;
};

int run_gen(const GenArgs& a, CLI::App* sub) {
  fs::create_directories(a.out);
  echo_config(sub, a.out);
  docee::EventSchema schema = docee::synth_schema(a.synth);
  docee::Corpus corpus = docee::generate_synthetic(a.synth, a.seed);
  docee::save_schema(schema, (fs::path(a.out) / "schema.json").string());
  docee::save_corpus(corpus, schema, (fs::path(a.out) / "corpus.jsonl").string());
  std::cout << "wrote " << corpus.size() << " documents to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data, schema, out;
  std::string dev;     // optional held-out corpus for per-epoch F1
  std::string resume;  // optional checkpoint to continue from
  uint64_t seed = 0;
  int epochs = 10;
  int save_every = 0;  // extra checkpoint cadence in epochs; 0 = end only
  int patience = 0;    // stop after this many epochs without dev-F1 gain; 0 = off
  docee::TrainConfig tc;
  docee::ModelConfig mc;
  int layers = 2;
};

double dev_f1(const docee::Corpus& dev, const docee::Vocabulary& vocab,
              const docee::EventSchema& schema, const docee::ModelParams& params,
              const docee::TrainConfig& tc) {
  std::vector<docee::Document> docs;
  for (const auto& ad : dev) docs.push_back(ad.doc);
  std::vector<docee::ExtractionOutput> outs = docee::extract_corpus(
      docs, vocab, schema, params, tc.threshold, tc.max_rounds, 1);
  std::vector<std::vector<docee::EventRecord>> preds;
  for (const auto& o : outs) preds.push_back(o.records);
  return docee::score_corpus(preds, dev, schema).overall.f1();
}

int run_train(TrainArgs& a, CLI::App* sub) {
  fs::create_directories(a.out);
  echo_config(sub, a.out);

  a.mc.sentence_enc.n_layers = a.layers;
  a.mc.document_enc.n_layers = a.layers;
  a.mc.memory_enc.n_layers = a.layers;
  a.mc.document_enc.n_heads = a.mc.sentence_enc.n_heads;
  a.mc.memory_enc.n_heads = a.mc.sentence_enc.n_heads;
  a.mc.validate();

  docee::EventSchema schema = docee::load_schema(a.schema);
  docee::LoadStats stats;
  docee::Corpus corpus = docee::load_corpus(a.data, schema, a.mc.caps, &stats);
  print_warnings(stats);
  if (corpus.empty()) throw docee::DataError("training corpus is empty");

  docee::Corpus dev;
  if (!a.dev.empty()) {
    docee::LoadStats dev_stats;
    dev = docee::load_corpus(a.dev, schema, a.mc.caps, &dev_stats);
    print_warnings(dev_stats);
  }

  std::optional<docee::Vocabulary> vocab;
  std::optional<docee::ModelParams> params;
  int64_t start_step = 0;
  std::vector<docee::Mat> resume_m, resume_v;
  if (!a.resume.empty()) {
    docee::Checkpoint ckpt = docee::read_checkpoint(a.resume);
    vocab = docee::vocab_from_checkpoint(ckpt);
    params = docee::params_from_checkpoint(ckpt, schema, *vocab);
    start_step = ckpt.step;
    resume_m = std::move(ckpt.adam_m);
    resume_v = std::move(ckpt.adam_v);
  } else {
    vocab = docee::Vocabulary::build(corpus);
    params = docee::ModelParams(a.mc, schema, *vocab, a.seed);
  }

  docee::Trainer trainer(*params, a.tc);
  if (start_step > 0) {
    if (resume_m.empty()) {
      resume_m.assign(params->store().size(), docee::Mat());
      resume_v.assign(params->store().size(), docee::Mat());
      for (int pid = 0; pid < params->store().size(); ++pid) {
        const docee::Mat& val = params->store().value(pid);
        resume_m[pid] = docee::Mat::Zero(val.rows(), val.cols());
        resume_v[pid] = docee::Mat::Zero(val.rows(), val.cols());
      }
    }
    trainer.restore(start_step, std::move(resume_m), std::move(resume_v));
  }

  std::ofstream log(fs::path(a.out) / "train_log.jsonl",
                    a.resume.empty() ? std::ios::trunc : std::ios::app);
  std::ofstream dev_log;
  if (!dev.empty())
    dev_log.open(fs::path(a.out) / "dev_log.jsonl",
                 a.resume.empty() ? std::ios::trunc : std::ios::app);

  const std::string ckpt_path = (fs::path(a.out) / "checkpoint.bin").string();
  auto save = [&]() {
    docee::save_checkpoint(ckpt_path, *params, *vocab, trainer.step_count(),
                           &trainer.adam_m(), &trainer.adam_v());
  };

  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 shuffle_rng(a.seed ^ 0x9E3779B97F4A7C15ull);

  double best_f1 = -1.0;
  int epochs_since_gain = 0;
  for (int epoch = 0; epoch < a.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    int n_steps = 0;
    for (size_t at = 0; at < order.size(); at += a.tc.batch_size) {
      std::vector<const docee::AnnotatedDoc*> batch;
      for (size_t b = at; b < std::min(order.size(), at + a.tc.batch_size); ++b)
        batch.push_back(&corpus[order[b]]);
      docee::StepStats st = trainer.step(batch, *vocab, schema);
      epoch_loss += st.l_all;
      ++n_steps;
      log << json{{"step", st.step},
                  {"L_rr", st.l_rr},
                  {"L_sl", st.l_sl},
                  {"L_ae", st.l_ae},
                  {"L_all", st.l_all}}
                 .dump()
          << "\n";
    }
    log.flush();
    std::cout << "epoch " << (epoch + 1) << "/" << a.epochs << " mean L_all "
              << (epoch_loss / std::max(1, n_steps));

    if (!dev.empty()) {
      const double f1 = dev_f1(dev, *vocab, schema, *params, a.tc);
      std::cout << " dev F1 " << f1;
      dev_log << json{{"epoch", epoch + 1}, {"dev_f1", f1}}.dump() << "\n";
      dev_log.flush();
      if (f1 > best_f1) {
        best_f1 = f1;
        epochs_since_gain = 0;
      } else {
        ++epochs_since_gain;
      }
      if (a.patience > 0 && epochs_since_gain >= a.patience) {
        std::cout << " (stopping: no dev gain for " << a.patience << " epochs)\n";
        break;
      }
    }
    std::cout << "\n";
    if (a.save_every > 0 && (epoch + 1) % a.save_every == 0) save();
  }
  save();
  std::cout << "checkpoint written to " << ckpt_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// extract

struct ExtractArgs {
  std::string ckpt, data, schema, out;
  double threshold = 0.5;
  int max_rounds = 8;
  int workers = 1;
};

int run_extract(ExtractArgs& a, CLI::App* sub) {
  fs::create_directories(a.out);
  echo_config(sub, a.out);

  docee::EventSchema schema = docee::load_schema(a.schema);
  docee::Checkpoint ckpt = docee::read_checkpoint(a.ckpt);
  docee::Vocabulary vocab = docee::vocab_from_checkpoint(ckpt);
  docee::ModelParams params = docee::params_from_checkpoint(ckpt, schema, vocab);

  docee::LoadStats stats;
  docee::Corpus corpus = docee::load_corpus(a.data, schema, params.config().caps, &stats);
  print_warnings(stats);
  std::vector<docee::Document> docs;
  for (const auto& ad : corpus) docs.push_back(ad.doc);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<docee::ExtractionOutput> outs = docee::extract_corpus(
      docs, vocab, schema, params, a.threshold, a.max_rounds, a.workers);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<std::vector<docee::EventRecord>> preds;
  for (const auto& o : outs) preds.push_back(o.records);
  docee::save_predictions(docs, preds, schema,
                          (fs::path(a.out) / "predictions.jsonl").string());

  const double docs_per_sec = seconds > 0 ? docs.size() / seconds : 0.0;
  json meta{{"n_docs", docs.size()},
            {"seconds", seconds},
            {"docs_per_sec", docs_per_sec}};
  write_text(fs::path(a.out) / "extract_meta.json", meta.dump(2) + "\n");
  std::cout << "extracted " << docs.size() << " docs in " << seconds << " s ("
            << docs_per_sec << " docs/sec)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string pred, gold, schema, out;
  double throughput = 0.0;
};

int run_eval(EvalArgs& a, CLI::App* sub) {
  fs::create_directories(a.out);
  echo_config(sub, a.out);

  docee::EventSchema schema = docee::load_schema(a.schema);
  docee::LoadStats stats;
  docee::Corpus gold = docee::load_corpus(a.gold, schema, {}, &stats);
  print_warnings(stats);
  auto pred_lines = docee::load_predictions(a.pred, schema);

  std::map<std::string, const std::vector<docee::EventRecord>*> by_id;
  for (const auto& [doc_id, records] : pred_lines) {
    if (!by_id.emplace(doc_id, &records).second)
      throw docee::DataError("duplicate doc_id in predictions: " + doc_id);
  }
  std::vector<std::vector<docee::EventRecord>> preds;
  for (const auto& ad : gold) {
    auto it = by_id.find(ad.doc.doc_id);
    if (it == by_id.end())
      throw docee::DataError("predictions missing doc_id " + ad.doc.doc_id);
    preds.push_back(*it->second);
    by_id.erase(it);
  }
  if (!by_id.empty())
    throw docee::DataError("predictions contain unknown doc_id " + by_id.begin()->first);

  docee::ScoreReport rep = docee::score_corpus(preds, gold, schema);
  rep.throughput = a.throughput;
  const std::string table = docee::report_table(rep, schema);
  write_text(fs::path(a.out) / "report.txt", table);
  write_text(fs::path(a.out) / "report.json", docee::report_json(rep, schema));
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Document-level event record extraction: generate, train, extract, score"};
  app.require_subcommand(1);
  std::string config_file;  // read via apply_config_file before parsing

  GenArgs ga;
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic corpus with gold spans");
  gen->add_option("--config", config_file, "Read options from a key=value file");
  gen->add_option("--out", ga.out, "Output directory")->required();
  gen->add_option("--seed", ga.seed, "Generator seed")->capture_default_str();
  gen->add_option("--docs", ga.synth.docs, "Number of documents")->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--types", ga.synth.event_types, "Event types")->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--roles", ga.synth.roles_per_type, "Roles per type")->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--zero-frac", ga.synth.zero_event_fraction,
                  "Fraction of documents with no events")->capture_default_str();
  gen->add_option("--multi-frac", ga.synth.multi_event_fraction,
                  "Fraction of event documents holding 2+ records")->capture_default_str();
  gen->add_option("--max-events", ga.synth.max_events_per_doc,
                  "Maximum records per document")->capture_default_str();
  gen->add_option("--scatter-min", ga.synth.scatter_min,
                  "Minimum distinct sentences per record")->capture_default_str();
  gen->add_option("--scatter-max", ga.synth.scatter_max,
                  "Maximum distinct sentences per record")->capture_default_str();
  gen->add_option("--arg-len-min", ga.synth.arg_len_min, "Shortest argument")->capture_default_str();
  gen->add_option("--arg-len-max", ga.synth.arg_len_max, "Longest argument")->capture_default_str();
  gen->add_option("--unfilled-prob", ga.synth.unfilled_role_prob,
                  "Per-role probability of staying unfilled")->capture_default_str();
  gen->add_option("--max-sentences", ga.synth.caps.max_sentences,
                  "Document sentence cap")->capture_default_str();
  gen->add_option("--max-sentence-len", ga.synth.caps.max_sentence_len,
                  "Sentence character cap")->capture_default_str();

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "Train a model on a JSONL corpus");
  train->add_option("--config", config_file, "Read options from a key=value file");
  train->add_option("--data", ta.data, "Training corpus JSONL")->required();
  train->add_option("--schema", ta.schema, "Event schema JSON")->required();
  train->add_option("--out", ta.out, "Output directory")->required();
  train->add_option("--dev", ta.dev, "Held-out corpus for per-epoch F1");
  train->add_option("--resume", ta.resume, "Checkpoint to continue from");
  train->add_option("--seed", ta.seed, "Initialization/shuffle seed")->capture_default_str();
  train->add_option("--epochs", ta.epochs, "Training epochs")->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--batch", ta.tc.batch_size, "Documents per step")->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--lr", ta.tc.lr, "Learning rate")->capture_default_str();
  train->add_option("--lambda1", ta.tc.lambda1, "Detection loss weight")->capture_default_str();
  train->add_option("--lambda2", ta.tc.lambda2, "Location loss weight")->capture_default_str();
  train->add_option("--lambda3", ta.tc.lambda3, "Copy loss weight")->capture_default_str();
  train->add_option("--threshold", ta.tc.threshold, "Detection threshold")->capture_default_str();
  train->add_option("--max-rounds", ta.tc.max_rounds, "Per-type record cap")->capture_default_str();
  train->add_option("--d", ta.mc.d, "Model dimension")->capture_default_str();
  train->add_option("--layers", ta.layers, "Encoder layers (all three stacks)")->capture_default_str();
  train->add_option("--heads", ta.mc.sentence_enc.n_heads, "Attention heads")->capture_default_str();
  train->add_option("--patience", ta.patience,
                    "Stop after N epochs without dev-F1 improvement (0 = off)")->capture_default_str();
  train->add_option("--save-every", ta.save_every,
                    "Also checkpoint every N epochs (0 = end only)")->capture_default_str();
  train->add_option("--max-sentences", ta.mc.caps.max_sentences,
                    "Document sentence cap")->capture_default_str();
  train->add_option("--max-sentence-len", ta.mc.caps.max_sentence_len,
                    "Sentence character cap")->capture_default_str();
  train->add_flag("--no-detection-memory",
                  [&ta](int64_t) { ta.mc.use_detection_memory = false; },
                  "Detect without subtracting the memory summary");
  train->add_flag("--no-redundancy-gate",
                  [&ta](int64_t) { ta.mc.use_redundancy_gate = false; },
                  "Locate on raw sentence representations");
  train->add_flag("--no-memory-query",
                  [&ta](int64_t) { ta.mc.use_memory_query = false; },
                  "Use raw role embeddings as queries");
  train->add_flag("--no-query-enrichment",
                  [&ta](int64_t) { ta.mc.use_query_enrichment = false; },
                  "Copy over unenriched character rows");

  ExtractArgs xa;
  CLI::App* extract = app.add_subcommand("extract", "Run inference with a checkpoint");
  extract->add_option("--config", config_file, "Read options from a key=value file");
  extract->add_option("--ckpt", xa.ckpt, "Model checkpoint")->required();
  extract->add_option("--data", xa.data, "Input corpus JSONL")->required();
  extract->add_option("--schema", xa.schema, "Event schema JSON")->required();
  extract->add_option("--out", xa.out, "Output directory")->required();
  extract->add_option("--threshold", xa.threshold, "Detection threshold")->capture_default_str();
  extract->add_option("--max-rounds", xa.max_rounds, "Per-type record cap")->capture_default_str();
  extract->add_option("--workers", xa.workers,
                      "Worker threads (0 = one per core)")->capture_default_str();

  EvalArgs ea;
  CLI::App* eval = app.add_subcommand("eval", "Score predictions against gold");
  eval->add_option("--config", config_file, "Read options from a key=value file");
  eval->add_option("--pred", ea.pred, "Predictions JSONL")->required();
  eval->add_option("--gold", ea.gold, "Gold corpus JSONL")->required();
  eval->add_option("--schema", ea.schema, "Event schema JSON")->required();
  eval->add_option("--out", ea.out, "Output directory")->required();
  eval->add_option("--throughput", ea.throughput,
                   "Inference speed (docs/sec) to embed in the report")->capture_default_str();

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    apply_config_file(app, args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    std::reverse(args.begin(), args.end());  // the parser consumes back to front
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return run_gen(ga, gen);
    if (train->parsed()) return run_train(ta, train);
    if (extract->parsed()) return run_extract(xa, extract);
    if (eval->parsed()) return run_eval(ea, eval);
  } catch (const docee::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const docee::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
