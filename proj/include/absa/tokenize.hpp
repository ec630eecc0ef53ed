#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace absa {

// Lowercases ASCII, splits on whitespace, and emits every other non-word
// character as its own single-character token ("easyJet demand." ->
// ["easyjet","demand","."]). Bytes >= 0x80 are kept inside word tokens, so
// multi-byte UTF-8 sequences pass through unchanged. Deterministic; empty
// text gives an empty list.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace absa
