#pragma once

#include "absa/tensor.hpp"
#include "absa/vocab.hpp"

namespace absa {

// Re-bases an embedding matrix onto a new vocabulary: rows of tokens shared
// with the source are copied bit-exactly; tokens absent from the source get
// the arithmetic mean of all non-reserved source rows. Reserved specials
// exist in both vocabularies, so their rows always copy through.
Tensor transfer_embeddings(const Vocabulary& src_vocab, const Tensor& src_matrix,
                           const Vocabulary& dst_vocab);

}  // namespace absa
