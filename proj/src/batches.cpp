#include "absa/batches.hpp"

#include <algorithm>
#include <numeric>

#include "absa/errors.hpp"

namespace absa {

std::vector<int> IdMatrix::column(std::size_t c) const {
    std::vector<int> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
    return out;
}

LmBatchStream::LmBatchStream(std::vector<int> ids, std::size_t batch_size, std::size_t bptt_len)
    : ids_(std::move(ids)), batch_size_(batch_size), bptt_len_(bptt_len) {
    if (batch_size_ == 0 || bptt_len_ == 0)
        throw ConfigError("lm_batches: batch_size and bptt_len must be positive");
    if (ids_.size() <= batch_size_ * 2)
        throw ValidationError("lm_batches: sequence of " + std::to_string(ids_.size()) +
                              " ids is too short for batch_size " + std::to_string(batch_size_));
    lane_len_ = ids_.size() / batch_size_;
}

std::size_t LmBatchStream::num_windows() const {
    // window k consumes input columns [k*L, k*L+L) and targets shifted by
    // one; the last full window needs k*L+L <= lane_len-1
    if (lane_len_ < bptt_len_ + 1) return 0;
    return (lane_len_ - 1) / bptt_len_;
}

std::pair<IdMatrix, IdMatrix> LmBatchStream::window(std::size_t k) const {
    if (k >= num_windows())
        throw ValidationError("lm_batches: window " + std::to_string(k) + " out of range");
    IdMatrix input(batch_size_, bptt_len_), target(batch_size_, bptt_len_);
    std::size_t base = k * bptt_len_;
    for (std::size_t b = 0; b < batch_size_; ++b) {
        const int* lane = ids_.data() + b * lane_len_;
        for (std::size_t t = 0; t < bptt_len_; ++t) {
            input.at(b, t) = lane[base + t];
            target.at(b, t) = lane[base + t + 1];
        }
    }
    return {std::move(input), std::move(target)};
}

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw ConfigError("label set must not be empty");
}

int LabelSet::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label) return static_cast<int>(i);
    std::string declared;
    for (const auto& l : labels_) declared += (declared.empty() ? "" : ", ") + l;
    throw ValidationError("unknown label '" + label + "'; declared set: {" + declared + "}");
}

const std::string& LabelSet::name(int index) const {
    if (index < 0 || static_cast<std::size_t>(index) >= labels_.size())
        throw ValidationError("label index " + std::to_string(index) + " out of range");
    return labels_[static_cast<std::size_t>(index)];
}

std::vector<ClsBatch> classification_batches(const std::vector<ClsItem>& items,
                                             std::size_t batch_size, Rng& rng,
                                             std::size_t bucket_factor) {
    if (batch_size == 0) throw ConfigError("classification_batches: batch_size must be positive");
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].ids.empty())
            throw ValidationError("classification_batches: empty token sequence", i);

    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<ClsBatch> batches;
    std::size_t bucket = std::max<std::size_t>(1, bucket_factor) * batch_size;
    for (std::size_t start = 0; start < order.size(); start += bucket) {
        std::size_t end = std::min(order.size(), start + bucket);
        // longest-first inside the bucket keeps padding waste low
        std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) {
                             return items[a].ids.size() > items[b].ids.size();
                         });
        for (std::size_t bs = start; bs < end; bs += batch_size) {
            std::size_t be = std::min(end, bs + batch_size);
            std::size_t width = 0;
            for (std::size_t i = bs; i < be; ++i)
                width = std::max(width, items[order[i]].ids.size());
            ClsBatch batch;
            batch.ids = IdMatrix(be - bs, width, Vocabulary::pad_id);
            for (std::size_t i = bs; i < be; ++i) {
                const ClsItem& it = items[order[i]];
                std::size_t row = i - bs;
                std::size_t off = width - it.ids.size();  // left padding
                for (std::size_t t = 0; t < it.ids.size(); ++t)
                    batch.ids.at(row, off + t) = it.ids[t];
                batch.lengths.push_back(it.ids.size());
                batch.labels.push_back(it.label);
                batch.values.push_back(it.value);
            }
            batches.push_back(std::move(batch));
        }
    }
    return batches;
}

std::vector<int> lm_id_stream(const std::vector<std::vector<std::string>>& docs,
                              const Vocabulary& vocab) {
    std::vector<int> ids;
    for (const auto& doc : docs) {
        for (const auto& tok : doc) ids.push_back(vocab.id(tok));
        ids.push_back(Vocabulary::eos_id);
    }
    return ids;
}

}  // namespace absa
