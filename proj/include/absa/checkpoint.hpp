#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "absa/model.hpp"
#include "absa/tensor.hpp"
#include "absa/vocab.hpp"

namespace absa {

struct StageProvenance {
    std::string name;
    std::string data_hash;    // hex of the input file bytes
    std::string config_hash;  // hex of the resolved stage config
    std::uint64_t seed = 0;
};

// Versioned single-file container of named parameter tensors, the
// vocabulary, stage provenance, and a metrics snapshot.
//
// Layout (integers little-endian):
//   magic "ABSACKPT" | version u32 | tensor_count u32
//   per tensor: name_len u32, name, dtype u8 (0 = f64), ndim u32,
//               dims u64..., offset u64 (into payload), byte_len u64
//   payload_size u64 | payload | json_len u64 | UTF-8 JSON blob
//
// save -> load -> save produces byte-identical files.
struct Checkpoint {
    static constexpr std::uint32_t supported_version = 1;
    static constexpr char magic[9] = "ABSACKPT";

    std::uint32_t format_version = supported_version;
    std::vector<std::pair<std::string, Tensor>> tensors;  // insertion order preserved
    std::vector<std::string> vocab_tokens;
    std::vector<std::uint64_t> vocab_freqs;
    nlohmann::json model_config;
    std::vector<StageProvenance> provenance;
    nlohmann::json metrics;

    const Tensor* find(const std::string& name) const;
};

// Atomic write via temp-file-and-rename.
void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// --- model glue -------------------------------------------------------------

Checkpoint make_checkpoint(const Model& model, const Vocabulary& vocab,
                           std::vector<StageProvenance> provenance, nlohmann::json metrics);

Vocabulary vocab_from_checkpoint(const Checkpoint& cp);
EncoderConfig encoder_config_from_checkpoint(const Checkpoint& cp);
HeadSpec head_spec_from_checkpoint(const Checkpoint& cp);
Model model_from_checkpoint(const Checkpoint& cp);

}  // namespace absa
