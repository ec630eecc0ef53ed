#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace absa {

// Token <-> id bijection with reserved specials at fixed ids and frequency
// metadata. Immutable after construction; freely shareable across threads.
class Vocabulary {
public:
    static constexpr int pad_id = 0;
    static constexpr int unk_id = 1;
    static constexpr int bos_id = 2;
    static constexpr int eos_id = 3;
    static constexpr int num_reserved = 4;

    // Tokens sorted by (frequency desc, token asc) after the reserved ids;
    // tokens below min_freq are excluded; size capped at max_size.
    static Vocabulary build(const std::vector<std::vector<std::string>>& corpus,
                            std::size_t max_size, std::size_t min_freq);
    static Vocabulary build_from_counts(const std::unordered_map<std::string, std::uint64_t>& counts,
                                        std::size_t max_size, std::size_t min_freq);
    // Reconstruction from serialized form; tokens must start with the four
    // reserved specials in order.
    static Vocabulary from_tokens(std::vector<std::string> tokens,
                                  std::vector<std::uint64_t> freqs);

    std::size_t size() const { return id_to_token_.size(); }
    int id(const std::string& token) const;  // unk_id when absent
    bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }
    const std::string& token(int id) const;
    std::uint64_t freq(const std::string& token) const;

    std::vector<int> numericalize(const std::vector<std::string>& tokens) const;
    std::vector<std::string> denumericalize(const std::vector<int>& ids) const;

    const std::vector<std::string>& tokens() const { return id_to_token_; }
    const std::vector<std::uint64_t>& freqs() const { return freqs_; }

private:
    Vocabulary() = default;
    std::vector<std::string> id_to_token_;
    std::vector<std::uint64_t> freqs_;
    std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace absa
