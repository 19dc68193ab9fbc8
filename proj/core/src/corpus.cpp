#include "docee/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"

using nlohmann::json;

namespace docee {

namespace {

void warn(LoadStats* stats, const std::string& msg) {
  if (stats) stats->warnings.push_back(msg);
}

json schema_to_json(const EventSchema& schema) {
  json roles = json::object();
  for (int t = 0; t < schema.n_types(); ++t) {
    roles[schema.type_name(t)] = schema.roles(t);
  }
  return json{{"types", schema.types()}, {"roles", roles}};
}

EventSchema schema_from_json(const json& j) {
  if (!j.contains("types") || !j.contains("roles")) {
    throw DataError("schema: expected object with \"types\" and \"roles\"");
  }
  std::vector<std::string> types = j.at("types").get<std::vector<std::string>>();
  std::vector<std::vector<std::string>> roles;
  for (const auto& t : types) {
    if (!j.at("roles").contains(t)) {
      throw DataError("schema: no role list for type '" + t + "'");
    }
    roles.push_back(j.at("roles").at(t).get<std::vector<std::string>>());
  }
  return EventSchema(std::move(types), std::move(roles));
}

}  // namespace

EventSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("schema '" + path + "': " + e.what());
  }
  return schema_from_json(j);
}

void save_schema(const EventSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write schema file: " + path);
  out << schema_to_json(schema).dump(2) << "\n";
}

Corpus load_corpus(const std::string& path, const EventSchema& schema,
                   const SizeCaps& caps, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return load_corpus(in, schema, caps, stats);
}

Corpus load_corpus(std::istream& in, const EventSchema& schema,
                   const SizeCaps& caps, LoadStats* stats) {
  Corpus corpus;
  std::string line;
  int line_no = 0;
  std::map<std::string, int> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    AnnotatedDoc entry;
    try {
      entry.doc.doc_id = j.at("doc_id").get<std::string>();
      if (!seen_ids.emplace(entry.doc.doc_id, line_no).second) {
        throw DataError("line " + std::to_string(line_no) + ": duplicate doc_id '" +
                        entry.doc.doc_id + "'");
      }
      const auto& sents = j.at("sentences");
      if (!sents.is_array() || sents.empty()) {
        throw DataError("line " + std::to_string(line_no) + ": document needs at least one sentence");
      }
      int n_sents = static_cast<int>(sents.size());
      if (n_sents > caps.max_sentences) {
        warn(stats, entry.doc.doc_id + ": truncated to " +
                        std::to_string(caps.max_sentences) + " sentences");
        if (stats) stats->sentences_truncated += n_sents - caps.max_sentences;
        n_sents = caps.max_sentences;
      }
      for (int s = 0; s < n_sents; ++s) {
        std::u32string u = utf8_decode(sents[s].get<std::string>());
        if (u.empty()) {
          throw DataError("line " + std::to_string(line_no) + ": sentence " +
                          std::to_string(s) + " is empty");
        }
        if (static_cast<int>(u.size()) > caps.max_sentence_len) {
          if (stats) stats->chars_truncated += static_cast<int>(u.size()) - caps.max_sentence_len;
          u.resize(caps.max_sentence_len);
        }
        entry.doc.sentences.push_back(std::move(u));
      }

      for (const auto& ev : j.value("events", json::array())) {
        const std::string type_name = ev.at("type").get<std::string>();
        const int t = schema.type_index(type_name);
        if (t < 0) {
          throw DataError("line " + std::to_string(line_no) + ": unknown event type '" +
                          type_name + "'");
        }
        GoldRecord rec;
        rec.type_index = t;
        rec.args.assign(schema.n_roles(t), std::nullopt);
        int dropped_here = 0;
        // Bound to a named value: iterating .items() of a temporary dangles.
        const json args_obj = ev.value("args", json::object());
        for (const auto& [role_name, arg] : args_obj.items()) {
          const int r = schema.role_index(t, role_name);
          if (r < 0) {
            throw DataError("line " + std::to_string(line_no) + ": unknown role '" +
                            role_name + "' for type '" + type_name + "'");
          }
          if (arg.is_null()) continue;
          GoldArg g;
          g.text = arg.at("text").get<std::string>();
          g.sent = arg.at("sent").get<int>();
          g.start = arg.at("span").at(0).get<int>();
          g.end = arg.at("span").at(1).get<int>();
          if (g.sent < 0 || g.start < 0 || g.end <= g.start) {
            throw DataError("line " + std::to_string(line_no) + ": invalid provenance for role '" +
                            role_name + "'");
          }
          if (g.sent >= static_cast<int>(entry.doc.sentences.size()) ||
              g.end > static_cast<int>(entry.doc.sentences[g.sent].size())) {
            warn(stats, entry.doc.doc_id + ": argument for role '" + role_name +
                            "' outside truncation bounds, dropped");
            ++dropped_here;
            if (stats) ++stats->args_dropped;
            continue;
          }
          const std::u32string slice =
              entry.doc.sentences[g.sent].substr(g.start, g.end - g.start);
          if (utf8_encode(slice) != g.text) {
            throw DataError("line " + std::to_string(line_no) + ": provenance span for role '" +
                            role_name + "' does not reproduce its text");
          }
          rec.args[r] = std::move(g);
        }
        if (rec.n_filled() == 0) {
          if (dropped_here > 0) {
            warn(stats, entry.doc.doc_id + ": record emptied by truncation, dropped");
            if (stats) ++stats->records_dropped;
            continue;
          }
          throw DataError("line " + std::to_string(line_no) + ": record of type '" + type_name +
                          "' has no filled roles");
        }
        entry.gold.push_back(std::move(rec));
      }
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    corpus.push_back(std::move(entry));
    if (stats) ++stats->docs;
  }
  return corpus;
}

namespace {

json doc_line(const Document& doc, const std::vector<GoldRecord>* gold,
              const std::vector<EventRecord>* preds, const EventSchema& schema) {
  json j;
  j["doc_id"] = doc.doc_id;
  json sents = json::array();
  for (const auto& s : doc.sentences) sents.push_back(utf8_encode(s));
  j["sentences"] = std::move(sents);
  json events = json::array();
  if (gold) {
    for (const auto& rec : *gold) {
      json args = json::object();
      const auto& roles = schema.roles(rec.type_index);
      for (size_t r = 0; r < roles.size(); ++r) {
        if (r < rec.args.size() && rec.args[r]) {
          const GoldArg& a = *rec.args[r];
          args[roles[r]] = json{{"text", a.text}, {"sent", a.sent}, {"span", {a.start, a.end}}};
        } else {
          args[roles[r]] = nullptr;
        }
      }
      events.push_back(json{{"type", schema.type_name(rec.type_index)}, {"args", std::move(args)}});
    }
  }
  if (preds) {
    for (const auto& rec : *preds) {
      json args = json::object();
      const auto& roles = schema.roles(rec.type_index);
      for (size_t r = 0; r < roles.size(); ++r) {
        if (r < rec.args.size() && rec.args[r]) {
          args[roles[r]] = json{{"text", *rec.args[r]}};
        } else {
          args[roles[r]] = nullptr;
        }
      }
      events.push_back(json{{"type", schema.type_name(rec.type_index)}, {"args", std::move(args)}});
    }
  }
  j["events"] = std::move(events);
  return j;
}

}  // namespace

void save_corpus(const Corpus& corpus, const EventSchema& schema, std::ostream& out) {
  for (const auto& entry : corpus) {
    out << doc_line(entry.doc, &entry.gold, nullptr, schema).dump() << "\n";
  }
}

void save_corpus(const Corpus& corpus, const EventSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  save_corpus(corpus, schema, out);
}

void save_predictions(const std::vector<Document>& docs,
                      const std::vector<std::vector<EventRecord>>& records,
                      const EventSchema& schema, const std::string& path) {
  if (docs.size() != records.size()) {
    throw DataError("save_predictions: documents and record lists disagree in length");
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions file: " + path);
  for (size_t i = 0; i < docs.size(); ++i) {
    out << doc_line(docs[i], nullptr, &records[i], schema).dump() << "\n";
  }
}

std::vector<std::pair<std::string, std::vector<EventRecord>>> load_predictions(
    const std::string& path, const EventSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions file: " + path);
  std::vector<std::pair<std::string, std::vector<EventRecord>>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    try {
      std::vector<EventRecord> records;
      for (const auto& ev : j.value("events", json::array())) {
        const std::string type_name = ev.at("type").get<std::string>();
        const int t = schema.type_index(type_name);
        if (t < 0) {
          throw DataError("line " + std::to_string(line_no) + ": unknown event type '" +
                          type_name + "'");
        }
        EventRecord rec;
        rec.type_index = t;
        rec.args.assign(schema.n_roles(t), std::nullopt);
        const json args_obj = ev.value("args", json::object());
        for (const auto& [role_name, arg] : args_obj.items()) {
          const int r = schema.role_index(t, role_name);
          if (r < 0) {
            throw DataError("line " + std::to_string(line_no) + ": unknown role '" + role_name +
                            "' for type '" + type_name + "'");
          }
          if (arg.is_null()) continue;
          rec.args[r] = arg.at("text").get<std::string>();
        }
        records.push_back(std::move(rec));
      }
      out.emplace_back(j.at("doc_id").get<std::string>(), std::move(records));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

namespace {

char32_t marker_char(int index) {
  if (index < 26) return U'A' + index;
  return static_cast<char32_t>(0x100 + (index - 26));  // Latin Extended-A
}

void validate(const SynthConfig& cfg) {
  auto fail = [](const std::string& msg) { throw DataError("synth config: " + msg); };
  if (cfg.docs < 1) fail("docs must be >= 1");
  if (cfg.event_types < 1) fail("event_types must be >= 1");
  if (cfg.roles_per_type < 1) fail("roles_per_type must be >= 1");
  if (cfg.event_types * cfg.roles_per_type > 128) fail("too many (type, role) markers");
  if (cfg.arg_alphabet < 2 || cfg.arg_alphabet > 16) fail("arg_alphabet must be in [2, 16]");
  if (cfg.filler_alphabet < 1 || cfg.filler_alphabet > 10) fail("filler_alphabet must be in [1, 10]");
  if (cfg.arg_len_min < 1 || cfg.arg_len_max < cfg.arg_len_min) fail("bad argument length range");
  if (cfg.scatter_min < 1 || cfg.scatter_max < cfg.scatter_min) fail("bad scatter range");
  if (cfg.zero_event_fraction < 0 || cfg.zero_event_fraction > 1) fail("bad zero_event_fraction");
  if (cfg.multi_event_fraction < 0 || cfg.multi_event_fraction > 1) fail("bad multi_event_fraction");
  if (cfg.unfilled_role_prob < 0 || cfg.unfilled_role_prob >= 1) fail("bad unfilled_role_prob");
  if (cfg.max_events_per_doc < 1) fail("max_events_per_doc must be >= 1");
  if (cfg.multi_event_fraction > 0 && cfg.max_events_per_doc < 2) {
    fail("multi_event_fraction > 0 needs max_events_per_doc >= 2");
  }
  const int worst_sentence =
      cfg.roles_per_type * (1 + cfg.arg_len_max + cfg.filler_suffix_max);
  if (worst_sentence > cfg.caps.max_sentence_len) {
    fail("a sentence cannot hold " + std::to_string(cfg.roles_per_type) +
         " arguments within max_sentence_len");
  }
  const int worst_sents =
      cfg.max_events_per_doc * std::min(cfg.scatter_max, cfg.roles_per_type) +
      cfg.filler_sentences_max;
  if (worst_sents > cfg.caps.max_sentences) {
    fail("events cannot fit within max_sentences");
  }
  if (cfg.filler_sentences_min < 0 || cfg.filler_sentences_max < cfg.filler_sentences_min) {
    fail("bad filler sentence count range");
  }
  if (cfg.filler_sentence_len_min < 1 ||
      cfg.filler_sentence_len_max < cfg.filler_sentence_len_min ||
      cfg.filler_sentence_len_max > cfg.caps.max_sentence_len) {
    fail("bad filler sentence length range");
  }
}

struct PlacedRole {
  int record = 0;
  int role = 0;
  int start = 0;
  int end = 0;
  std::u32string text;
};

struct PendingSentence {
  std::u32string text;
  std::vector<PlacedRole> placed;  // empty for filler sentences
};

}  // namespace

EventSchema synth_schema(const SynthConfig& cfg) {
  validate(cfg);
  std::vector<std::string> types;
  std::vector<std::vector<std::string>> roles;
  for (int t = 0; t < cfg.event_types; ++t) {
    types.push_back("E" + std::to_string(t + 1));
    std::vector<std::string> rs;
    for (int r = 0; r < cfg.roles_per_type; ++r) {
      rs.push_back("r" + std::to_string(r + 1));
    }
    roles.push_back(std::move(rs));
  }
  return EventSchema(std::move(types), std::move(roles));
}

Corpus generate_synthetic(const SynthConfig& cfg, uint64_t seed) {
  validate(cfg);
  Corpus corpus;
  corpus.reserve(cfg.docs);

  for (int di = 0; di < cfg.docs; ++di) {
    std::mt19937_64 rng(mix64(seed * 0x517CC1B727220A95ull + static_cast<uint64_t>(di)));
    auto uniform = [&rng](int lo, int hi) {
      return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    auto chance = [&rng](double p) {
      return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
    };
    auto arg_char = [&] { return static_cast<char32_t>(U'a' + uniform(0, cfg.arg_alphabet - 1)); };
    auto filler_char = [&] {
      return static_cast<char32_t>(U'q' + uniform(0, cfg.filler_alphabet - 1));
    };

    int n_events = 0;
    if (!chance(cfg.zero_event_fraction)) {
      n_events = 1;
      if (chance(cfg.multi_event_fraction)) {
        n_events = uniform(2, cfg.max_events_per_doc);
      }
    }

    std::vector<int> record_types(n_events);
    std::vector<PendingSentence> sentences;
    for (int e = 0; e < n_events; ++e) {
      const int type = uniform(0, cfg.event_types - 1);
      record_types[e] = type;

      std::vector<int> filled;
      for (int r = 0; r < cfg.roles_per_type; ++r) {
        if (!chance(cfg.unfilled_role_prob)) filled.push_back(r);
      }
      if (filled.empty()) filled.push_back(uniform(0, cfg.roles_per_type - 1));
      std::shuffle(filled.begin(), filled.end(), rng);

      const int k = static_cast<int>(filled.size());
      const int scatter = std::clamp(uniform(cfg.scatter_min, cfg.scatter_max), 1, k);

      // Split the shuffled role list into `scatter` nonempty groups.
      std::vector<int> cuts;
      if (scatter > 1) {
        std::vector<int> gaps(k - 1);
        for (int i = 0; i < k - 1; ++i) gaps[i] = i + 1;
        std::shuffle(gaps.begin(), gaps.end(), rng);
        cuts.assign(gaps.begin(), gaps.begin() + (scatter - 1));
        std::sort(cuts.begin(), cuts.end());
      }
      cuts.push_back(k);

      int lo = 0;
      for (int cut : cuts) {
        PendingSentence ps;
        for (int i = lo; i < cut; ++i) {
          const int role = filled[i];
          ps.text.push_back(marker_char(type * cfg.roles_per_type + role));
          PlacedRole pr;
          pr.record = e;
          pr.role = role;
          pr.start = static_cast<int>(ps.text.size());
          const int len = uniform(cfg.arg_len_min, cfg.arg_len_max);
          for (int c = 0; c < len; ++c) ps.text.push_back(arg_char());
          pr.end = static_cast<int>(ps.text.size());
          pr.text = ps.text.substr(pr.start, pr.end - pr.start);
          ps.placed.push_back(std::move(pr));
          for (int c = uniform(0, cfg.filler_suffix_max); c > 0; --c) {
            ps.text.push_back(filler_char());
          }
        }
        sentences.push_back(std::move(ps));
        lo = cut;
      }
    }

    // Mix in filler-only sentences at random positions; event sentences keep
    // their relative order, which makes record order canonical.
    const int n_filler = uniform(cfg.filler_sentences_min, cfg.filler_sentences_max);
    for (int f = 0; f < n_filler; ++f) {
      PendingSentence ps;
      const int len = uniform(cfg.filler_sentence_len_min, cfg.filler_sentence_len_max);
      for (int c = 0; c < len; ++c) ps.text.push_back(filler_char());
      const int pos = uniform(0, static_cast<int>(sentences.size()));
      sentences.insert(sentences.begin() + pos, std::move(ps));
    }
    if (sentences.empty()) {
      PendingSentence ps;
      ps.text.push_back(filler_char());
      sentences.push_back(std::move(ps));
    }

    AnnotatedDoc entry;
    {
      std::ostringstream id;
      id << "d" << std::setw(5) << std::setfill('0') << di;
      entry.doc.doc_id = id.str();
    }
    std::vector<GoldRecord> records(n_events);
    for (int e = 0; e < n_events; ++e) {
      records[e].type_index = record_types[e];
      records[e].args.assign(cfg.roles_per_type, std::nullopt);
    }
    for (size_t s = 0; s < sentences.size(); ++s) {
      entry.doc.sentences.push_back(sentences[s].text);
      for (const auto& pr : sentences[s].placed) {
        GoldArg g;
        g.text = utf8_encode(pr.text);
        g.sent = static_cast<int>(s);
        g.start = pr.start;
        g.end = pr.end;
        records[pr.record].args[pr.role] = std::move(g);
      }
    }
    entry.gold = std::move(records);
    corpus.push_back(std::move(entry));
  }
  return corpus;
}

}  // namespace docee
