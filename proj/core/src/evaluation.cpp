#include "docee/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace docee {

std::string normalize_ws(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // swallow leading whitespace
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_space = true;
    } else {
      if (in_space && !out.empty()) out.push_back(' ');
      out.push_back(static_cast<char>(c));
      in_space = false;
    }
  }
  return out;
}

int record_match_score(const EventRecord& pred, const GoldRecord& gold) {
  int score = 0;
  const size_t n = std::min(pred.args.size(), gold.args.size());
  for (size_t r = 0; r < n; ++r) {
    if (pred.args[r] && gold.args[r] &&
        normalize_ws(*pred.args[r]) == normalize_ws(gold.args[r]->text))
      ++score;
  }
  return score;
}

namespace {

std::vector<int> match_greedy(const std::vector<std::vector<int>>& score,
                              int n_pred, int n_gold) {
  std::vector<int> pairing(n_pred, -1);
  std::vector<char> gold_used(n_gold, 0), pred_used(n_pred, 0);
  for (;;) {
    int best = 0, bi = -1, bj = -1;
    for (int i = 0; i < n_pred; ++i) {
      if (pred_used[i]) continue;
      for (int j = 0; j < n_gold; ++j) {
        if (gold_used[j]) continue;
        if (score[i][j] > best) {
          best = score[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0) break;  // only zero-score pairs remain; they contribute nothing
    pairing[bi] = bj;
    pred_used[bi] = 1;
    gold_used[bj] = 1;
  }
  return pairing;
}

std::vector<int> match_exact(const std::vector<std::vector<int>>& score,
                             int n_pred, int n_gold) {
  const int n_masks = 1 << n_gold;
  // best[i][mask]: max total score pairing preds i.. with golds outside mask.
  std::vector<std::vector<int>> best(n_pred + 1, std::vector<int>(n_masks, 0));
  for (int i = n_pred - 1; i >= 0; --i) {
    for (int mask = 0; mask < n_masks; ++mask) {
      int b = best[i + 1][mask];  // leave pred i unmatched
      for (int j = 0; j < n_gold; ++j) {
        if (mask & (1 << j)) continue;
        b = std::max(b, score[i][j] + best[i + 1][mask | (1 << j)]);
      }
      best[i][mask] = b;
    }
  }
  std::vector<int> pairing(n_pred, -1);
  int mask = 0;
  for (int i = 0; i < n_pred; ++i) {
    if (best[i][mask] == best[i + 1][mask]) continue;  // unmatched is optimal
    for (int j = 0; j < n_gold; ++j) {
      if (mask & (1 << j)) continue;
      if (best[i][mask] == score[i][j] + best[i + 1][mask | (1 << j)]) {
        pairing[i] = j;
        mask |= 1 << j;
        break;
      }
    }
  }
  return pairing;
}

}  // namespace

std::vector<int> match_records(const std::vector<EventRecord>& preds,
                               const std::vector<GoldRecord>& golds) {
  const int n_pred = static_cast<int>(preds.size());
  const int n_gold = static_cast<int>(golds.size());
  std::vector<std::vector<int>> score(n_pred, std::vector<int>(n_gold, 0));
  for (int i = 0; i < n_pred; ++i)
    for (int j = 0; j < n_gold; ++j) score[i][j] = record_match_score(preds[i], golds[j]);
  if (n_pred == 0 || n_gold == 0) return std::vector<int>(n_pred, -1);
  if (n_gold <= 16) return match_exact(score, n_pred, n_gold);
  return match_greedy(score, n_pred, n_gold);
}

Tally score_doc_type(const std::vector<EventRecord>& preds,
                     const std::vector<GoldRecord>& golds) {
  const std::vector<int> pairing = match_records(preds, golds);
  long long tp = 0, pred_filled = 0, gold_filled = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    pred_filled += preds[i].n_filled();
    if (pairing[i] >= 0) tp += record_match_score(preds[i], golds[pairing[i]]);
  }
  for (const GoldRecord& gr : golds) gold_filled += gr.n_filled();
  Tally t;
  t.tp = tp;
  t.fp = pred_filled - tp;
  t.fn = gold_filled - tp;
  return t;
}

namespace {

// Mean over gold records of the number of distinct sentences holding the
// record's arguments; -1 when the document has no gold records.
double scatter_value(const AnnotatedDoc& adoc) {
  if (adoc.gold.empty()) return -1.0;
  double total = 0;
  for (const GoldRecord& rec : adoc.gold) {
    std::set<int> sentences;
    for (const auto& arg : rec.args)
      if (arg) sentences.insert(arg->sent);
    total += static_cast<double>(sentences.size());
  }
  return total / static_cast<double>(adoc.gold.size());
}

int bucket_index(double scatter) {
  const int b = static_cast<int>(std::floor(scatter + 1e-9));
  return std::clamp(b, 1, 5) - 1;
}

}  // namespace

ScoreReport score_corpus(const std::vector<std::vector<EventRecord>>& preds,
                         const Corpus& gold, const EventSchema& schema) {
  if (preds.size() != gold.size())
    throw DataError("prediction/gold document counts differ");
  ScoreReport rep;
  rep.n_docs = static_cast<int>(gold.size());
  rep.per_type.assign(schema.n_types(), Tally{});

  for (size_t di = 0; di < gold.size(); ++di) {
    Tally doc_tally;
    for (int type = 0; type < schema.n_types(); ++type) {
      std::vector<EventRecord> p;
      for (const EventRecord& r : preds[di])
        if (r.type_index == type) p.push_back(r);
      std::vector<GoldRecord> q;
      for (const GoldRecord& r : gold[di].gold)
        if (r.type_index == type) q.push_back(r);
      if (p.empty() && q.empty()) continue;
      const Tally t = score_doc_type(p, q);
      doc_tally += t;
      rep.per_type[type] += t;
    }
    rep.overall += doc_tally;

    const size_t n_records = gold[di].gold.size();
    if (n_records == 1) {
      rep.single_docs += doc_tally;
      ++rep.n_single;
    } else if (n_records >= 2) {
      rep.multi_docs += doc_tally;
      ++rep.n_multi;
    }
    const double scatter = scatter_value(gold[di]);
    if (scatter >= 0) {
      const int b = bucket_index(scatter);
      rep.buckets[b] += doc_tally;
      ++rep.bucket_docs[b];
    }
  }
  return rep;
}

namespace {

const char* kBucketLabels[5] = {"1", "2", "3", "4", ">=5"};

void tally_row(std::ostream& os, const std::string& name, const Tally& t) {
  os << std::left << std::setw(18) << name << std::right << std::fixed
     << std::setprecision(4) << std::setw(9) << t.precision() << std::setw(9)
     << t.recall() << std::setw(9) << t.f1() << std::setw(8) << t.tp << std::setw(8)
     << t.fp << std::setw(8) << t.fn << "\n";
}

nlohmann::json tally_json(const Tally& t) {
  return nlohmann::json{{"precision", t.precision()}, {"recall", t.recall()},
                        {"f1", t.f1()},               {"tp", t.tp},
                        {"fp", t.fp},                 {"fn", t.fn}};
}

}  // namespace

std::string report_table(const ScoreReport& rep, const EventSchema& schema) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "group" << std::right << std::setw(9) << "P"
     << std::setw(9) << "R" << std::setw(9) << "F1" << std::setw(8) << "TP"
     << std::setw(8) << "FP" << std::setw(8) << "FN" << "\n";
  tally_row(os, "overall", rep.overall);
  for (int t = 0; t < schema.n_types(); ++t)
    tally_row(os, "type " + schema.type_name(t), rep.per_type[t]);
  tally_row(os, "single (" + std::to_string(rep.n_single) + " docs)", rep.single_docs);
  tally_row(os, "multi (" + std::to_string(rep.n_multi) + " docs)", rep.multi_docs);
  for (int b = 0; b < 5; ++b) {
    tally_row(os,
              "scatter " + std::string(kBucketLabels[b]) + " (" +
                  std::to_string(rep.bucket_docs[b]) + ")",
              rep.buckets[b]);
  }
  if (rep.throughput > 0)
    os << "throughput: " << std::fixed << std::setprecision(2) << rep.throughput
       << " docs/sec\n";
  return os.str();
}

std::string report_json(const ScoreReport& rep, const EventSchema& schema) {
  nlohmann::json j;
  j["overall"] = tally_json(rep.overall);
  nlohmann::json per_type = nlohmann::json::object();
  for (int t = 0; t < schema.n_types(); ++t)
    per_type[schema.type_name(t)] = tally_json(rep.per_type[t]);
  j["per_type"] = per_type;
  j["splits"] = {{"single", tally_json(rep.single_docs)},
                 {"multi", tally_json(rep.multi_docs)}};
  j["splits"]["single"]["n_docs"] = rep.n_single;
  j["splits"]["multi"]["n_docs"] = rep.n_multi;
  nlohmann::json buckets = nlohmann::json::array();
  for (int b = 0; b < 5; ++b) {
    nlohmann::json jb = tally_json(rep.buckets[b]);
    jb["label"] = kBucketLabels[b];
    jb["n_docs"] = rep.bucket_docs[b];
    buckets.push_back(jb);
  }
  j["buckets"] = buckets;
  j["throughput_docs_per_sec"] = rep.throughput;
  j["n_docs"] = rep.n_docs;
  return j.dump(2) + "\n";
}

}  // namespace docee
