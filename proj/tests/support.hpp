#pragma once

// Shared fixtures and independent oracles for the test binaries. Everything
// here is deliberately small and written straight from definitions so it can
// serve as a second opinion on the library code.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "docee/common.hpp"
#include "docee/evaluation.hpp"
#include "docee/model.hpp"
#include "docee/types.hpp"

namespace testsup {

using docee::EventRecord;
using docee::EventSchema;
using docee::GoldArg;
using docee::GoldRecord;
using docee::Mat;
using docee::ModelConfig;
using docee::ModelParams;
using docee::Vocabulary;

inline std::u32string U(const char* s) { return docee::utf8_decode(s); }

inline EventSchema two_type_schema() {
  return EventSchema({"A", "B"}, {{"x", "y", "z"}, {"u", "v"}});
}

inline EventSchema one_type_schema(int n_roles = 2) {
  std::vector<std::string> roles;
  for (int i = 0; i < n_roles; ++i) roles.push_back("r" + std::to_string(i + 1));
  return EventSchema({"A"}, {roles});
}

inline Vocabulary abc_vocab(int n = 6) {
  std::vector<char32_t> chars;
  for (int i = 0; i < n; ++i) chars.push_back(static_cast<char32_t>('a' + i));
  return Vocabulary(chars);
}

// All three encoder stacks collapsed to the same tiny shape; layers = 0 gives
// the hand-computable identity mode.
inline ModelConfig tiny_config(int d, int layers, int heads = 1) {
  ModelConfig cfg;
  cfg.d = d;
  cfg.sentence_enc = {layers, heads, 2, true};
  cfg.document_enc = {layers, heads, 2, true};
  cfg.memory_enc = {layers, heads, 2, false};
  return cfg;
}

inline void zero_all_params(ModelParams& params) {
  for (int pid = 0; pid < params.store().size(); ++pid)
    params.store().value(pid).setZero();
}

inline void set_param(ModelParams& params, int pid, const Mat& value) {
  if (params.store().value(pid).rows() != value.rows() ||
      params.store().value(pid).cols() != value.cols())
    throw std::logic_error("set_param: shape mismatch for " + params.store().name(pid));
  params.store().value(pid) = value;
}

inline Mat random_mat(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

// ---------------------------------------------------------------------------
// Independent record-matching oracle: exhaustive search over every injective
// pred -> gold assignment (with skips), maximizing the number of agreeing
// filled slots. Written as plain recursion, nothing shared with the library's
// matcher beyond the argument-normalization helper.

inline int oracle_pair_score(const EventRecord& pred, const GoldRecord& gold) {
  int s = 0;
  const size_t n = std::min(pred.args.size(), gold.args.size());
  for (size_t r = 0; r < n; ++r) {
    if (!pred.args[r] || !gold.args[r]) continue;
    if (docee::normalize_ws(*pred.args[r]) == docee::normalize_ws(gold.args[r]->text)) ++s;
  }
  return s;
}

inline int oracle_best_total(const std::vector<EventRecord>& preds,
                             const std::vector<GoldRecord>& golds, size_t i,
                             unsigned used) {
  if (i == preds.size()) return 0;
  int best = oracle_best_total(preds, golds, i + 1, used);  // pred i unmatched
  for (size_t g = 0; g < golds.size(); ++g) {
    if (used & (1u << g)) continue;
    const int with = oracle_pair_score(preds[i], golds[g]) +
                     oracle_best_total(preds, golds, i + 1, used | (1u << g));
    if (with > best) best = with;
  }
  return best;
}

inline docee::Tally oracle_tally(const std::vector<EventRecord>& preds,
                                 const std::vector<GoldRecord>& golds) {
  long long pred_filled = 0, gold_filled = 0;
  for (const auto& p : preds) pred_filled += p.n_filled();
  for (const auto& g : golds) gold_filled += g.n_filled();
  docee::Tally t;
  t.tp = oracle_best_total(preds, golds, 0, 0u);
  t.fp = pred_filled - t.tp;
  t.fn = gold_filled - t.tp;
  return t;
}

// Random single-type matcher instances over a tiny argument alphabet (small
// alphabet = frequent collisions = interesting matchings).
struct MatcherInstance {
  std::vector<EventRecord> preds;
  std::vector<GoldRecord> golds;
};

inline MatcherInstance random_matcher_instance(std::mt19937_64& rng, int max_records,
                                               int n_roles) {
  static const char* kArgs[] = {"a", "b", "ab", "ba", "aa"};
  std::uniform_int_distribution<int> n_dist(0, max_records);
  std::uniform_int_distribution<int> arg_dist(0, 5);  // 5 = unfilled
  MatcherInstance inst;
  const int n_pred = n_dist(rng);
  const int n_gold = n_dist(rng);
  for (int i = 0; i < n_pred; ++i) {
    EventRecord rec;
    rec.type_index = 0;
    for (int r = 0; r < n_roles; ++r) {
      const int a = arg_dist(rng);
      rec.args.push_back(a == 5 ? std::nullopt
                                : std::optional<std::string>(kArgs[a]));
    }
    inst.preds.push_back(std::move(rec));
  }
  for (int i = 0; i < n_gold; ++i) {
    GoldRecord rec;
    rec.type_index = 0;
    int filled = 0;
    for (int r = 0; r < n_roles; ++r) {
      const int a = arg_dist(rng);
      if (a == 5) {
        rec.args.push_back(std::nullopt);
      } else {
        GoldArg ga;
        ga.text = kArgs[a];
        ga.sent = 0;
        ga.start = 0;
        ga.end = static_cast<int>(ga.text.size());
        rec.args.push_back(std::move(ga));
        ++filled;
      }
    }
    if (filled == 0) {  // gold records always carry at least one argument
      GoldArg ga;
      ga.text = "a";
      ga.sent = 0;
      ga.start = 0;
      ga.end = 1;
      rec.args[0] = std::move(ga);
    }
    inst.golds.push_back(std::move(rec));
  }
  return inst;
}

// Canonical comparable form of a record set (for exact set-equality checks).
inline std::vector<std::pair<int, std::vector<std::string>>> record_set_key(
    const std::vector<EventRecord>& records) {
  std::vector<std::pair<int, std::vector<std::string>>> key;
  for (const auto& rec : records) {
    std::vector<std::string> args;
    for (const auto& a : rec.args) args.push_back(a ? *a : std::string("\x01<none>"));
    key.emplace_back(rec.type_index, std::move(args));
  }
  std::sort(key.begin(), key.end());
  return key;
}

inline std::vector<EventRecord> gold_as_records(const std::vector<GoldRecord>& gold) {
  std::vector<EventRecord> out;
  for (const auto& g : gold) {
    EventRecord rec;
    rec.type_index = g.type_index;
    for (const auto& a : g.args)
      rec.args.push_back(a ? std::optional<std::string>(a->text) : std::nullopt);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace testsup
