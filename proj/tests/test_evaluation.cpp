#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <random>

#include "docee/corpus.hpp"
#include "docee/evaluation.hpp"
#include "support.hpp"

using namespace docee;
using namespace testsup;

namespace {

GoldRecord gold_rec(int type, const std::vector<const char*>& texts) {
  GoldRecord r;
  r.type_index = type;
  for (const char* t : texts) {
    if (t == nullptr) {
      r.args.push_back(std::nullopt);
    } else {
      GoldArg a;
      a.text = t;
      a.sent = 0;
      a.start = 0;
      a.end = static_cast<int>(std::string(t).size());
      r.args.push_back(std::move(a));
    }
  }
  return r;
}

EventRecord pred_rec(int type, const std::vector<const char*>& texts) {
  EventRecord r;
  r.type_index = type;
  for (const char* t : texts)
    r.args.push_back(t ? std::optional<std::string>(t) : std::nullopt);
  return r;
}

}  // namespace

TEST_CASE("whitespace normalization for argument comparison") {
  CHECK(normalize_ws("abc") == "abc");
  CHECK(normalize_ws("  a  b\t c \n") == "a b c");
  CHECK(normalize_ws("") == "");
  CHECK(normalize_ws(" \t\n ") == "");
  CHECK(normalize_ws("a") == normalize_ws("  a "));
}

TEST_CASE("tally arithmetic and degenerate F1") {
  Tally t{3, 1, 1};
  CHECK(t.precision() == doctest::Approx(0.75));
  CHECK(t.recall() == doctest::Approx(0.75));
  CHECK(t.f1() == doctest::Approx(0.75));

  Tally zero;
  CHECK(zero.precision() == 0.0);
  CHECK(zero.recall() == 0.0);
  CHECK(zero.f1() == 0.0);

  Tally sum = zero;
  sum += t;
  sum += Tally{1, 0, 2};
  CHECK(sum.tp == 4);
  CHECK(sum.fp == 1);
  CHECK(sum.fn == 3);
}

TEST_CASE("record pair score counts agreeing filled slots only") {
  GoldRecord g = gold_rec(0, {"x", "y", nullptr});
  CHECK(record_match_score(pred_rec(0, {"x", "y", nullptr}), g) == 2);
  CHECK(record_match_score(pred_rec(0, {"x", "wrong", nullptr}), g) == 1);
  CHECK(record_match_score(pred_rec(0, {nullptr, nullptr, nullptr}), g) == 0);
  // Both unfilled is not agreement; an argument for an unfilled gold role is
  // not agreement either.
  CHECK(record_match_score(pred_rec(0, {"x", "y", "extra"}), g) == 2);
  // Whitespace-normalized equality.
  CHECK(record_match_score(pred_rec(0, {" x ", "y", nullptr}), g) == 2);
}

TEST_CASE("one perfect prediction pairs fully") {
  std::vector<GoldRecord> golds{gold_rec(0, {"x", "y", "z"})};
  std::vector<EventRecord> preds{pred_rec(0, {"x", "y", "z"})};
  std::vector<int> pairing = match_records(preds, golds);
  REQUIRE(pairing.size() == 1);
  CHECK(pairing[0] == 0);
  Tally t = score_doc_type(preds, golds);
  CHECK(t.tp == 3);
  CHECK(t.fp == 0);
  CHECK(t.fn == 0);
}

TEST_CASE("the stronger of two predictions takes the single gold") {
  std::vector<GoldRecord> golds{gold_rec(0, {"x", "y", "z"})};
  std::vector<EventRecord> preds{
      pred_rec(0, {"x", "q", "r"}),   // 1 slot
      pred_rec(0, {"x", "y", "z"})};  // 3 slots
  std::vector<int> pairing = match_records(preds, golds);
  CHECK(pairing[0] == -1);
  CHECK(pairing[1] == 0);
  Tally t = score_doc_type(preds, golds);
  CHECK(t.tp == 3);
  CHECK(t.fp == 3);  // the unmatched prediction's filled slots
  CHECK(t.fn == 0);
}

TEST_CASE("empty prediction list turns all gold slots into misses") {
  std::vector<GoldRecord> golds{gold_rec(0, {"x", nullptr, "z"}),
                                gold_rec(0, {"u", "v", nullptr})};
  Tally t = score_doc_type({}, golds);
  CHECK(t.tp == 0);
  CHECK(t.fp == 0);
  CHECK(t.fn == 4);
}

TEST_CASE("hand-counted document: 3 right slots, 1 wrong, 1 missed") {
  // One gold record with 4 filled roles; the prediction nails 3 of them and
  // fills the 4th with a wrong string: TP=3, FP=1, FN=1, P=R=F1=0.75.
  std::vector<GoldRecord> golds{gold_rec(0, {"a", "b", "c", "d"})};
  std::vector<EventRecord> preds{pred_rec(0, {"a", "b", "c", "WRONG"})};
  Tally t = score_doc_type(preds, golds);
  CHECK(t.tp == 3);
  CHECK(t.fp == 1);
  CHECK(t.fn == 1);
  CHECK(t.precision() == doctest::Approx(0.75));
  CHECK(t.recall() == doctest::Approx(0.75));
  CHECK(t.f1() == doctest::Approx(0.75));
}

TEST_CASE("assignment is globally optimal, not first-pick greedy") {
  // A first-pick-greedy matcher pairs P0-G0 (2 slots) and leaves P1 with 2
  // wrong slots, totalling TP=3. The optimal pairing P0-G1, P1-G0 reaches 4.
  std::vector<GoldRecord> golds{gold_rec(0, {"x", "y", "z"}),
                                gold_rec(0, {"u", "v", "z"})};
  std::vector<EventRecord> preds{pred_rec(0, {"x", "v", "z"}),
                                 pred_rec(0, {"x", "y", "w"})};
  CHECK(record_match_score(preds[0], golds[0]) == 2);
  CHECK(record_match_score(preds[0], golds[1]) == 2);
  CHECK(record_match_score(preds[1], golds[0]) == 2);
  Tally t = score_doc_type(preds, golds);
  CHECK(t.tp == 4);
  CHECK(t.fp == 2);
  CHECK(t.fn == 2);
  CHECK(oracle_tally(preds, golds).tp == 4);  // the independent oracle agrees
}

TEST_CASE("matcher agrees with the exhaustive oracle on random instances") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 3000; ++trial) {
    MatcherInstance inst = random_matcher_instance(rng, 3, 3);
    Tally lib = score_doc_type(inst.preds, inst.golds);
    Tally oracle = oracle_tally(inst.preds, inst.golds);
    REQUIRE(lib.tp == oracle.tp);
    REQUIRE(lib.fp == oracle.fp);
    REQUIRE(lib.fn == oracle.fn);
  }
}

TEST_CASE("slot partition: TP+FP covers predictions, TP+FN covers gold") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    MatcherInstance inst = random_matcher_instance(rng, 4, 3);
    long long pred_filled = 0, gold_filled = 0;
    for (const auto& p : inst.preds) pred_filled += p.n_filled();
    for (const auto& g : inst.golds) gold_filled += g.n_filled();
    Tally t = score_doc_type(inst.preds, inst.golds);
    CHECK(t.tp + t.fp == pred_filled);
    CHECK(t.tp + t.fn == gold_filled);
    CHECK(t.tp >= 0);
  }
}

TEST_CASE("larger instances: matching stays optimal against the oracle") {
  std::mt19937_64 rng(321);
  for (int trial = 0; trial < 200; ++trial) {
    MatcherInstance inst = random_matcher_instance(rng, 5, 2);
    CHECK(score_doc_type(inst.preds, inst.golds).tp == oracle_tally(inst.preds, inst.golds).tp);
  }
}

// ---------------------------------------------------------------------------
// Corpus-level scoring.

namespace {

AnnotatedDoc doc_with(const std::string& id, std::vector<GoldRecord> gold) {
  AnnotatedDoc d;
  d.doc.doc_id = id;
  d.doc.sentences = {U("placeholder")};
  d.gold = std::move(gold);
  return d;
}

}  // namespace

TEST_CASE("corpus scoring: overall, per type, and perfect predictions") {
  EventSchema schema = two_type_schema();
  Corpus gold;
  gold.push_back(doc_with("d1", {gold_rec(0, {"a", "b", nullptr})}));
  gold.push_back(doc_with("d2", {gold_rec(1, {"c", "d"})}));

  std::vector<std::vector<EventRecord>> perfect{
      {pred_rec(0, {"a", "b", nullptr})}, {pred_rec(1, {"c", "d"})}};
  ScoreReport rep = score_corpus(perfect, gold, schema);
  CHECK(rep.overall.tp == 4);
  CHECK(rep.overall.fp == 0);
  CHECK(rep.overall.fn == 0);
  CHECK(rep.overall.f1() == doctest::Approx(1.0));
  REQUIRE(rep.per_type.size() == 2);
  CHECK(rep.per_type[0].tp == 2);
  CHECK(rep.per_type[1].tp == 2);
  CHECK(rep.n_docs == 2);

  // Mispredicting the type costs on both sides.
  std::vector<std::vector<EventRecord>> wrong_type{
      {pred_rec(1, {"a", "b"})}, {pred_rec(1, {"c", "d"})}};
  ScoreReport rep2 = score_corpus(wrong_type, gold, schema);
  CHECK(rep2.overall.tp == 2);
  CHECK(rep2.overall.fp == 2);
  CHECK(rep2.overall.fn == 2);

  CHECK_THROWS_AS(score_corpus({{}}, gold, schema), DataError);  // length mismatch
}

TEST_CASE("single/multi split counts documents by gold record count") {
  EventSchema schema = two_type_schema();
  Corpus gold;
  gold.push_back(doc_with("s1", {gold_rec(0, {"a", nullptr, nullptr})}));
  gold.push_back(doc_with("m1", {gold_rec(0, {"a", nullptr, nullptr}),
                                 gold_rec(1, {"b", "c"})}));
  gold.push_back(doc_with("z1", {}));  // no records: in neither split

  std::vector<std::vector<EventRecord>> preds{
      {pred_rec(0, {"a", nullptr, nullptr})},
      {pred_rec(0, {"a", nullptr, nullptr}), pred_rec(1, {"b", "c"})},
      {}};
  ScoreReport rep = score_corpus(preds, gold, schema);
  CHECK(rep.n_single == 1);
  CHECK(rep.n_multi == 1);
  CHECK(rep.single_docs.tp == 1);
  CHECK(rep.multi_docs.tp == 3);
  CHECK(rep.n_docs == 3);
}

TEST_CASE("scatter buckets use the mean distinct-sentence count per record") {
  EventSchema schema({"T"}, {{"p", "q", "r", "s"}});
  auto rec_spread = [&](const std::vector<int>& sents) {
    GoldRecord r;
    r.type_index = 0;
    for (int i = 0; i < 4; ++i) {
      if (i < (int)sents.size()) {
        GoldArg a;
        a.text = "t" + std::to_string(i);
        a.sent = sents[i];
        a.start = 0;
        a.end = 2;
        r.args.push_back(std::move(a));
      } else {
        r.args.push_back(std::nullopt);
      }
    }
    return r;
  };

  Corpus gold;
  // Doc A: one record, all args in one sentence -> bucket "1".
  gold.push_back(doc_with("A", {rec_spread({0, 0, 0})}));
  // Doc B: records spreading 2 and 4 sentences -> mean 3 -> bucket "3".
  gold.push_back(doc_with("B", {rec_spread({0, 0, 1}), rec_spread({0, 1, 2, 3})}));
  // Doc C: no records -> no bucket.
  gold.push_back(doc_with("C", {}));

  std::vector<std::vector<EventRecord>> preds{{}, {}, {}};
  ScoreReport rep = score_corpus(preds, gold, schema);
  CHECK(rep.bucket_docs[0] == 1);
  CHECK(rep.bucket_docs[1] == 0);
  CHECK(rep.bucket_docs[2] == 1);
  CHECK(rep.bucket_docs[3] == 0);
  CHECK(rep.bucket_docs[4] == 0);
}

TEST_CASE("bucket populations over a generated corpus sum to docs with gold") {
  SynthConfig cfg;
  cfg.docs = 1000;
  cfg.zero_event_fraction = 0.1;
  EventSchema schema = synth_schema(cfg);
  Corpus corpus = generate_synthetic(cfg, 17);

  std::vector<std::vector<EventRecord>> empty_preds(corpus.size());
  ScoreReport rep = score_corpus(empty_preds, corpus, schema);
  int with_gold = 0;
  for (const AnnotatedDoc& d : corpus)
    if (!d.gold.empty()) ++with_gold;
  int bucket_sum = 0;
  for (int b = 0; b < 5; ++b) bucket_sum += rep.bucket_docs[b];
  CHECK(bucket_sum == with_gold);
  CHECK(rep.n_single + rep.n_multi == with_gold);
}

TEST_CASE("document order does not change corpus-level counts") {
  SynthConfig cfg;
  cfg.docs = 60;
  EventSchema schema = synth_schema(cfg);
  Corpus corpus = generate_synthetic(cfg, 23);
  std::vector<std::vector<EventRecord>> preds;
  for (const AnnotatedDoc& d : corpus) {
    preds.push_back(gold_as_records(d.gold));
    if (!preds.back().empty()) preds.back().pop_back();  // drop one record
  }
  ScoreReport fwd = score_corpus(preds, corpus, schema);

  Corpus reversed(corpus.rbegin(), corpus.rend());
  std::vector<std::vector<EventRecord>> preds_rev(preds.rbegin(), preds.rend());
  ScoreReport rev = score_corpus(preds_rev, reversed, schema);
  CHECK(fwd.overall.tp == rev.overall.tp);
  CHECK(fwd.overall.fp == rev.overall.fp);
  CHECK(fwd.overall.fn == rev.overall.fn);
  for (int t = 0; t < schema.n_types(); ++t) {
    CHECK(fwd.per_type[t].tp == rev.per_type[t].tp);
    CHECK(fwd.per_type[t].fn == rev.per_type[t].fn);
  }
}

TEST_CASE("report renderers: table mentions every section, JSON agrees") {
  EventSchema schema = two_type_schema();
  Corpus gold;
  gold.push_back(doc_with("d1", {gold_rec(0, {"a", "b", nullptr})}));
  gold.push_back(doc_with("d2", {gold_rec(1, {"c", "d"}), gold_rec(0, {"e", nullptr, nullptr})}));
  std::vector<std::vector<EventRecord>> preds{
      {pred_rec(0, {"a", "b", nullptr})},
      {pred_rec(1, {"c", "x"})}};
  ScoreReport rep = score_corpus(preds, gold, schema);
  rep.throughput = 123.4;

  std::string table = report_table(rep, schema);
  CHECK(table.find("overall") != std::string::npos);
  CHECK(table.find("A") != std::string::npos);
  CHECK(table.find("B") != std::string::npos);
  CHECK(table.find("single") != std::string::npos);
  CHECK(table.find("multi") != std::string::npos);
  CHECK(table.find(">=5") != std::string::npos);

  nlohmann::json j = nlohmann::json::parse(report_json(rep, schema));
  CHECK(j.at("overall").at("tp").get<long long>() == rep.overall.tp);
  CHECK(j.at("overall").at("f1").get<double>() ==
        doctest::Approx(rep.overall.f1()).epsilon(1e-9));
  CHECK(j.at("per_type").at("A").at("tp").get<long long>() == rep.per_type[0].tp);
  CHECK(j.at("splits").at("single").at("n_docs").get<int>() == rep.n_single);
  CHECK(j.at("buckets").size() == 5);
  CHECK(j.at("throughput_docs_per_sec").get<double>() ==
        doctest::Approx(123.4).epsilon(1e-9));
  CHECK(j.at("n_docs").get<int>() == rep.n_docs);
}
