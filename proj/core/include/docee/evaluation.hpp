#pragma once

#include <array>
#include <string>
#include <vector>

#include "docee/types.hpp"

namespace docee {

// Trim + collapse runs of ASCII whitespace to single spaces; argument strings
// are compared with exact equality after this.
std::string normalize_ws(const std::string& s);

struct Tally {
  long long tp = 0, fp = 0, fn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  Tally& operator+=(const Tally& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// Number of roles on which the two records carry the same (filled) argument.
int record_match_score(const EventRecord& pred, const GoldRecord& gold);

// One-to-one record assignment maximizing the total number of agreeing
// slots. result[i] = gold index paired with pred i, or -1. Exact via bitmask
// DP up to 16 golds, best-pair-first greedy beyond that.
std::vector<int> match_records(const std::vector<EventRecord>& preds,
                               const std::vector<GoldRecord>& golds);

// Slot-level tally for one document and one event type. Because unmatched
// slots are all counted against their side, TP + FP = predicted filled slots
// and TP + FN = gold filled slots.
Tally score_doc_type(const std::vector<EventRecord>& preds,
                     const std::vector<GoldRecord>& golds);

struct ScoreReport {
  Tally overall;
  std::vector<Tally> per_type;
  Tally single_docs, multi_docs;        // by gold record count (1 vs >= 2)
  int n_single = 0, n_multi = 0;
  std::array<Tally, 5> buckets{};       // mean scattered-sentence count 1,2,3,4,>=5
  std::array<int, 5> bucket_docs{};
  double throughput = 0.0;              // docs/sec; 0 = not measured
  int n_docs = 0;
};

// preds[i] are the predicted records of gold[i].doc; order must align.
ScoreReport score_corpus(const std::vector<std::vector<EventRecord>>& preds,
                         const Corpus& gold, const EventSchema& schema);

std::string report_table(const ScoreReport& rep, const EventSchema& schema);
std::string report_json(const ScoreReport& rep, const EventSchema& schema);

}  // namespace docee
