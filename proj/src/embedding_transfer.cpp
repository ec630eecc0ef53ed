#include "absa/embedding_transfer.hpp"

#include <algorithm>

#include "absa/errors.hpp"

namespace absa {

Tensor transfer_embeddings(const Vocabulary& src_vocab, const Tensor& src_matrix,
                           const Vocabulary& dst_vocab) {
    if (src_matrix.rank() != 2 || src_matrix.rows() != src_vocab.size())
        throw ShapeError("transfer_embeddings: matrix " + shape_str(src_matrix.shape()) +
                         " does not match source vocabulary of " +
                         std::to_string(src_vocab.size()) + " tokens");
    std::size_t dim = src_matrix.cols();
    std::size_t n_src = src_matrix.rows();

    std::vector<double> mean_row(dim, 0.0);
    std::size_t n_semantic = n_src - Vocabulary::num_reserved;
    if (n_semantic > 0) {
        for (std::size_t r = Vocabulary::num_reserved; r < n_src; ++r)
            for (std::size_t j = 0; j < dim; ++j) mean_row[j] += src_matrix.at(r, j);
        for (std::size_t j = 0; j < dim; ++j) mean_row[j] /= static_cast<double>(n_semantic);
    }

    Tensor out(Shape{dst_vocab.size(), dim});
    for (std::size_t r = 0; r < dst_vocab.size(); ++r) {
        const std::string& tok = dst_vocab.token(static_cast<int>(r));
        if (src_vocab.contains(tok)) {
            std::size_t sr = static_cast<std::size_t>(src_vocab.id(tok));
            std::copy_n(src_matrix.data() + sr * dim, dim, out.data() + r * dim);
        } else {
            std::copy_n(mean_row.data(), dim, out.data() + r * dim);
        }
    }
    return out;
}

}  // namespace absa
