#include "docee/types.hpp"

#include <algorithm>
#include <limits>
#include <utility>

namespace docee {

EventSchema::EventSchema(std::vector<std::string> types,
                         std::vector<std::vector<std::string>> roles)
    : types_(std::move(types)), roles_(std::move(roles)) {
  if (types_.size() != roles_.size()) {
    throw DataError("schema: types and role lists disagree in length");
  }
  for (size_t t = 0; t < types_.size(); ++t) {
    if (!type_idx_.emplace(types_[t], static_cast<int>(t)).second) {
      throw DataError("schema: duplicate event type '" + types_[t] + "'");
    }
    std::map<std::string, int> seen;
    for (size_t r = 0; r < roles_[t].size(); ++r) {
      if (!seen.emplace(roles_[t][r], static_cast<int>(r)).second) {
        throw DataError("schema: duplicate role '" + roles_[t][r] + "' in type '" +
                        types_[t] + "'");
      }
    }
    if (roles_[t].empty()) {
      throw DataError("schema: type '" + types_[t] + "' has no roles");
    }
  }
}

int EventSchema::type_index(const std::string& name) const {
  auto it = type_idx_.find(name);
  return it == type_idx_.end() ? -1 : it->second;
}

int EventSchema::role_index(int type_idx, const std::string& role) const {
  const auto& rs = roles_.at(type_idx);
  for (size_t i = 0; i < rs.size(); ++i) {
    if (rs[i] == role) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> EventSchema::roles_per_type() const {
  std::vector<int> out;
  out.reserve(roles_.size());
  for (const auto& r : roles_) out.push_back(static_cast<int>(r.size()));
  return out;
}

uint64_t EventSchema::hash() const {
  std::string canon;
  for (size_t t = 0; t < types_.size(); ++t) {
    canon += types_[t];
    canon += '\x1f';
    for (const auto& r : roles_[t]) {
      canon += r;
      canon += '\x1e';
    }
    canon += '\x1d';
  }
  return fnv1a64(canon);
}

int GoldRecord::n_filled() const {
  int n = 0;
  for (const auto& a : args) n += a.has_value() ? 1 : 0;
  return n;
}

int EventRecord::n_filled() const {
  int n = 0;
  for (const auto& a : args) n += a.has_value() ? 1 : 0;
  return n;
}

Vocabulary::Vocabulary(std::vector<char32_t> chars_sorted) : chars_(std::move(chars_sorted)) {
  std::sort(chars_.begin(), chars_.end());
  chars_.erase(std::unique(chars_.begin(), chars_.end()), chars_.end());
  for (size_t i = 0; i < chars_.size(); ++i) {
    char_ids_[chars_[i]] = static_cast<int>(i) + 2;
  }
}

Vocabulary Vocabulary::build(const Corpus& corpus) {
  std::vector<char32_t> chars;
  for (const auto& entry : corpus) {
    for (const auto& sent : entry.doc.sentences) {
      chars.insert(chars.end(), sent.begin(), sent.end());
    }
  }
  return Vocabulary(std::move(chars));
}

int Vocabulary::id(char32_t c) const {
  auto it = char_ids_.find(c);
  return it == char_ids_.end() ? kUnk : it->second;
}

uint64_t Vocabulary::hash() const {
  std::string canon;
  for (char32_t c : chars_) {
    canon += utf8_encode(c);
    canon += '\x1f';
  }
  return fnv1a64(canon);
}

EncodedDoc encode_with_vocab(const Document& doc, const Vocabulary& vocab) {
  EncodedDoc out;
  out.doc_id = doc.doc_id;
  out.ids.reserve(doc.sentences.size());
  for (const auto& sent : doc.sentences) {
    std::vector<int> ids;
    ids.reserve(sent.size());
    for (char32_t c : sent) ids.push_back(vocab.id(c));
    out.ids.push_back(std::move(ids));
  }
  return out;
}

namespace {

// Sort key: (earliest filled sentence, span start there, role-wise texts).
std::pair<int, int> earliest_mention(const GoldRecord& r) {
  int best_sent = std::numeric_limits<int>::max();
  int best_start = std::numeric_limits<int>::max();
  for (const auto& a : r.args) {
    if (!a) continue;
    if (a->sent < best_sent || (a->sent == best_sent && a->start < best_start)) {
      best_sent = a->sent;
      best_start = a->start;
    }
  }
  return {best_sent, best_start};
}

}  // namespace

bool canonical_gold_less(const GoldRecord& a, const GoldRecord& b) {
  auto ka = earliest_mention(a);
  auto kb = earliest_mention(b);
  if (ka != kb) return ka < kb;
  const size_t n = std::max(a.args.size(), b.args.size());
  for (size_t i = 0; i < n; ++i) {
    const std::string ta = i < a.args.size() && a.args[i] ? a.args[i]->text : "";
    const std::string tb = i < b.args.size() && b.args[i] ? b.args[i]->text : "";
    if (ta != tb) return ta < tb;
  }
  return false;
}

std::vector<GoldRecord> canonical_gold_order(const std::vector<GoldRecord>& records,
                                             int type_index) {
  std::vector<GoldRecord> out;
  for (const auto& r : records) {
    if (r.type_index == type_index) out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), canonical_gold_less);
  return out;
}

}  // namespace docee
