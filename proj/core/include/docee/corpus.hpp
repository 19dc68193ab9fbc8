#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "docee/types.hpp"

namespace docee {

struct SizeCaps {
  int max_sentences = 64;
  int max_sentence_len = 128;
};

// Counters filled during ingestion; callers use them to surface warnings.
struct LoadStats {
  int docs = 0;
  int sentences_truncated = 0;
  int chars_truncated = 0;
  int args_dropped = 0;     // provenance fell outside truncation bounds
  int records_dropped = 0;  // record emptied by argument drops
  std::vector<std::string> warnings;
};

EventSchema load_schema(const std::string& path);
void save_schema(const EventSchema& schema, const std::string& path);

// JSONL, one document per line:
//   {"doc_id": str, "sentences": [str],
//    "events": [{"type": str,
//                "args": {role: {"text": str, "sent": int, "span": [int,int]} | null}}]}
Corpus load_corpus(const std::string& path, const EventSchema& schema,
                   const SizeCaps& caps = {}, LoadStats* stats = nullptr);
Corpus load_corpus(std::istream& in, const EventSchema& schema,
                   const SizeCaps& caps = {}, LoadStats* stats = nullptr);

void save_corpus(const Corpus& corpus, const EventSchema& schema, const std::string& path);
void save_corpus(const Corpus& corpus, const EventSchema& schema, std::ostream& out);

// Predictions use the corpus line shape minus provenance.
void save_predictions(const std::vector<Document>& docs,
                      const std::vector<std::vector<EventRecord>>& records,
                      const EventSchema& schema, const std::string& path);
std::vector<std::pair<std::string, std::vector<EventRecord>>> load_predictions(
    const std::string& path, const EventSchema& schema);

// Synthetic corpus generation.
//
// Documents are built from three disjoint character classes: per-(type,role)
// marker characters, an argument alphabet and a filler alphabet. Each record
// scatters its filled roles over `scatter` distinct sentences; each of those
// sentences holds "<marker><argument><filler...>" runs for its roles. Records
// occupy the document in order, with filler-only sentences mixed in. Gold
// provenance is exact by construction.
struct SynthConfig {
  int docs = 200;
  int event_types = 2;
  int roles_per_type = 3;
  double zero_event_fraction = 0.0;   // P(doc has no events)
  double multi_event_fraction = 0.29; // P(2+ events | at least one)
  int max_events_per_doc = 3;
  int scatter_min = 1;                // distinct sentences per record
  int scatter_max = 3;
  int arg_len_min = 2;
  int arg_len_max = 4;
  double unfilled_role_prob = 0.15;
  int arg_alphabet = 10;
  int filler_alphabet = 8;
  int filler_suffix_max = 2;          // filler chars after each argument run
  int filler_sentences_min = 1;       // filler-only sentences per document
  int filler_sentences_max = 3;
  int filler_sentence_len_min = 4;
  int filler_sentence_len_max = 10;
  SizeCaps caps;
};

EventSchema synth_schema(const SynthConfig& cfg);
Corpus generate_synthetic(const SynthConfig& cfg, uint64_t seed);

}  // namespace docee
