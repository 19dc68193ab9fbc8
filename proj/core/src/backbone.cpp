#include "docee/backbone.hpp"

#include "docee/common.hpp"

namespace docee {

namespace {

// Valid prefix length: ids up to but excluding trailing PADs.
int valid_prefix(const std::vector<int>& ids) {
  int n = static_cast<int>(ids.size());
  while (n > 0 && ids[n - 1] == Vocabulary::kPad) --n;
  return n;
}

}  // namespace

EncodedDocument encode_document(Graph& g, const EncodedDoc& doc,
                                const ModelParams& params) {
  if (doc.ids.empty()) throw DataError("cannot encode a document with no sentences");
  const int d = params.config().d;

  EncodedDocument out;
  std::vector<Var> pooled;  // 1 x d raw sentence representations
  for (size_t j = 0; j < doc.ids.size(); ++j) {
    const std::vector<int>& ids = doc.ids[j];
    if (ids.empty())
      throw DataError("cannot encode an empty sentence (doc " + doc.doc_id + ")");
    for (int id : ids) {
      if (id < 0 || id >= params.vocab_size())
        throw DataError("character id " + std::to_string(id) +
                        " out of vocabulary range (doc " + doc.doc_id + ")");
    }
    const int n_valid = valid_prefix(ids);
    Var embedded = g.param_rows(params.char_embed, ids);
    // An all-padding sentence never feeds valid outputs; encode it with every
    // row "valid" only to keep shapes legal, and mask it at document level.
    Var encoded = run_encoder(g, embedded, n_valid > 0 ? n_valid : (int)ids.size(),
                              params.sentence_enc, d);
    out.char_mats.push_back(encoded);
    out.char_lens.push_back(n_valid);
    pooled.push_back(g.max_over_rows(encoded, n_valid > 0 ? n_valid : (int)ids.size()));
  }

  int n_sent = static_cast<int>(doc.ids.size());
  while (n_sent > 0 && out.char_lens[n_sent - 1] == 0) --n_sent;
  if (n_sent == 0)
    throw DataError("document contains only padding sentences (doc " + doc.doc_id + ")");
  out.n_sentences = n_sent;

  Var raw_sent = g.concat_rows(pooled);  // N x d
  out.sent_mat = run_encoder(g, raw_sent, n_sent, params.document_enc, d);
  out.doc_vec = g.max_over_rows(out.sent_mat, n_sent);
  return out;
}

}  // namespace docee
