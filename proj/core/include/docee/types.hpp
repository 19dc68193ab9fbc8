#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docee/common.hpp"

namespace docee {

// A document is an ordered list of sentences; the character (Unicode
// codepoint) is the token unit throughout.
struct Document {
  std::string doc_id;
  std::vector<std::u32string> sentences;
};

// Event types with a fixed, ordered role list per type. Role order drives
// decoding order and must be identical across training and inference.
class EventSchema {
 public:
  EventSchema() = default;
  EventSchema(std::vector<std::string> types,
              std::vector<std::vector<std::string>> roles);

  int n_types() const { return static_cast<int>(types_.size()); }
  const std::vector<std::string>& types() const { return types_; }
  const std::string& type_name(int t) const { return types_.at(t); }
  int type_index(const std::string& name) const;  // -1 if unknown
  const std::vector<std::string>& roles(int type_idx) const { return roles_.at(type_idx); }
  int n_roles(int type_idx) const { return static_cast<int>(roles_.at(type_idx).size()); }
  int role_index(int type_idx, const std::string& role) const;  // -1 if unknown
  std::vector<int> roles_per_type() const;

  uint64_t hash() const;

 private:
  std::vector<std::string> types_;
  std::vector<std::vector<std::string>> roles_;
  std::map<std::string, int> type_idx_;
};

// One gold argument with provenance: the text, the sentence it came from and
// the [start, end) codepoint span inside that sentence.
struct GoldArg {
  std::string text;
  int sent = -1;
  int start = 0;
  int end = 0;
};

// Gold event record; args are aligned with the schema's role order for the
// record's type. At least one role must be filled.
struct GoldRecord {
  int type_index = -1;
  std::vector<std::optional<GoldArg>> args;

  int n_filled() const;
};

// Predicted event record; role -> argument string, aligned like GoldRecord.
struct EventRecord {
  int type_index = -1;
  std::vector<std::optional<std::string>> args;

  int n_filled() const;
  bool operator==(const EventRecord&) const = default;
};

struct AnnotatedDoc {
  Document doc;
  std::vector<GoldRecord> gold;
};

using Corpus = std::vector<AnnotatedDoc>;

// Character -> dense id map. PAD=0 and UNK=1 are reserved; real characters
// start at id 2. Id 0 never appears in encoded documents, which lets padding
// be expressed in-band where tests need it.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<char32_t> chars_sorted);

  static Vocabulary build(const Corpus& corpus);

  int size() const { return static_cast<int>(chars_.size()) + 2; }
  int id(char32_t c) const;
  const std::vector<char32_t>& chars() const { return chars_; }
  uint64_t hash() const;

 private:
  std::vector<char32_t> chars_;       // id - 2 -> char
  std::map<char32_t, int> char_ids_;  // char -> id
};

// A document's sentences as vocabulary ids, ready for the model.
struct EncodedDoc {
  std::string doc_id;
  std::vector<std::vector<int>> ids;
};

EncodedDoc encode_with_vocab(const Document& doc, const Vocabulary& vocab);

// Lexicographic order used everywhere gold records of one type need a
// canonical sequence: earliest argument sentence, then earliest span start,
// then the role-wise argument texts.
bool canonical_gold_less(const GoldRecord& a, const GoldRecord& b);
std::vector<GoldRecord> canonical_gold_order(const std::vector<GoldRecord>& records,
                                             int type_index);

}  // namespace docee
