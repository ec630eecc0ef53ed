#include "absa/vocab.hpp"

#include <algorithm>

#include "absa/errors.hpp"

namespace absa {

static const char* kReserved[] = {"<pad>", "<unk>", "<bos>", "<eos>"};

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus,
                             std::size_t max_size, std::size_t min_freq) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& stream : corpus)
        for (const auto& tok : stream) ++counts[tok];
    return build_from_counts(counts, max_size, min_freq);
}

Vocabulary Vocabulary::build_from_counts(
    const std::unordered_map<std::string, std::uint64_t>& counts, std::size_t max_size,
    std::size_t min_freq) {
    if (max_size < num_reserved)
        throw ConfigError("vocabulary: max_size must be at least " +
                          std::to_string(num_reserved));
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    entries.reserve(counts.size());
    for (const auto& [tok, n] : counts)
        if (n >= min_freq) entries.emplace_back(tok, n);
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;  // lexicographic tiebreak keeps builds deterministic
    });

    Vocabulary v;
    for (int i = 0; i < num_reserved; ++i) {
        v.id_to_token_.emplace_back(kReserved[i]);
        v.freqs_.push_back(0);
        v.token_to_id_.emplace(kReserved[i], i);
    }
    for (const auto& [tok, n] : entries) {
        if (v.id_to_token_.size() >= max_size) break;
        if (v.token_to_id_.count(tok)) continue;  // reserved literal in corpus
        v.token_to_id_.emplace(tok, static_cast<int>(v.id_to_token_.size()));
        v.id_to_token_.push_back(tok);
        v.freqs_.push_back(n);
    }
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens,
                                   std::vector<std::uint64_t> freqs) {
    if (tokens.size() < num_reserved)
        throw ValidationError("vocabulary: fewer tokens than reserved specials");
    if (freqs.size() != tokens.size())
        throw ValidationError("vocabulary: freqs/tokens length mismatch");
    for (int i = 0; i < num_reserved; ++i)
        if (tokens[static_cast<std::size_t>(i)] != kReserved[i])
            throw ValidationError("vocabulary: reserved token at id " + std::to_string(i) +
                                  " is '" + tokens[static_cast<std::size_t>(i)] + "'");
    Vocabulary v;
    v.id_to_token_ = std::move(tokens);
    v.freqs_ = std::move(freqs);
    for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
        if (!v.token_to_id_.emplace(v.id_to_token_[i], static_cast<int>(i)).second)
            throw ValidationError("vocabulary: duplicate token '" + v.id_to_token_[i] + "'");
    }
    return v;
}

int Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? unk_id : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
        throw ValidationError("vocabulary: id " + std::to_string(id) + " out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::freq(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? 0 : freqs_[static_cast<std::size_t>(it->second)];
}

std::vector<int> Vocabulary::numericalize(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

std::vector<std::string> Vocabulary::denumericalize(const std::vector<int>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(token(i));
    return out;
}

}  // namespace absa
