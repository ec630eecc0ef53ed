#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "absa/rng.hpp"
#include "absa/vocab.hpp"

namespace absa {

struct IdMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<int> data;

    IdMatrix() = default;
    IdMatrix(std::size_t r, std::size_t c, int fill = 0) : rows(r), cols(c), data(r * c, fill) {}
    int& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    int at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::vector<int> column(std::size_t c) const;
};

// Contiguous-lane language-model batching: the id sequence is split into
// batch_size lanes, and each window emits bptt_len columns whose targets are
// the inputs shifted by one within the lane. The trailing remainder that
// cannot fill a window is dropped.
class LmBatchStream {
public:
    LmBatchStream(std::vector<int> ids, std::size_t batch_size, std::size_t bptt_len);

    std::size_t num_windows() const;
    std::size_t batch_size() const { return batch_size_; }
    std::size_t bptt_len() const { return bptt_len_; }
    std::size_t lane_len() const { return lane_len_; }
    // (input, target) id matrices of shape [batch_size, bptt_len]
    std::pair<IdMatrix, IdMatrix> window(std::size_t k) const;

private:
    std::vector<int> ids_;
    std::size_t batch_size_, bptt_len_, lane_len_;
};

// Declared label set for a classification task; unknown labels are rejected
// with the full set in the message.
class LabelSet {
public:
    explicit LabelSet(std::vector<std::string> labels);
    int index_of(const std::string& label) const;
    const std::string& name(int index) const;
    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    std::vector<std::string> labels_;
};

struct ClsItem {
    std::vector<int> ids;       // non-empty
    int label = 0;              // classification target
    double value = 0.0;         // regression target
};

struct ClsBatch {
    IdMatrix ids;                      // left-padded with <pad>
    std::vector<std::size_t> lengths;  // true lengths, for pooling masks
    std::vector<int> labels;
    std::vector<double> values;
};

// Shuffles into buckets, sorts by length inside each bucket, then slices
// into left-padded batches. Deterministic given the rng state.
std::vector<ClsBatch> classification_batches(const std::vector<ClsItem>& items,
                                             std::size_t batch_size, Rng& rng,
                                             std::size_t bucket_factor = 4);

// Token id stream for LM training: each document's tokens followed by <eos>.
std::vector<int> lm_id_stream(const std::vector<std::vector<std::string>>& docs,
                              const Vocabulary& vocab);

}  // namespace absa
