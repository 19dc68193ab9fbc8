#pragma once

#include <vector>

#include "docee/encoder.hpp"
#include "docee/graph.hpp"
#include "docee/model.hpp"
#include "docee/types.hpp"

namespace docee {

// Contextual representations of one document, all living on the caller's
// graph. char_mats[j] holds the encoded character rows of sentence j
// (including any trailing padding rows — char_lens[j] of them are valid);
// sent_mat stacks the document-aware sentence rows; doc_vec is the pooled
// document representation (1 x d).
struct EncodedDocument {
  std::vector<Var> char_mats;
  std::vector<int> char_lens;
  Var sent_mat;
  Var doc_vec;
  int n_sentences = 0;  // valid sentences (trailing all-padding ones excluded)
};

// Embedding + sentence encoder + max-pool + document encoder + max-pool.
// Trailing PAD ids within a sentence and trailing all-PAD sentences are
// treated as padding and cannot influence any valid representation.
// Throws DataError on empty input or out-of-range character ids.
EncodedDocument encode_document(Graph& g, const EncodedDoc& doc,
                                const ModelParams& params);

}  // namespace docee
