#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace absa {

// Base class for all structured errors thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatch in a graph op. Message names the op and both shapes.
struct ShapeError : Error {
    using Error::Error;
};

// Non-finite value produced during a training step, or other numeric failure.
struct NumericsError : Error {
    using Error::Error;
};

// A data record violated a type invariant (bad label, out-of-range value, ...).
struct ValidationError : Error {
    ValidationError(const std::string& msg, std::size_t record_index)
        : Error(msg), record_index(record_index) {}
    explicit ValidationError(const std::string& msg) : Error(msg), record_index(0) {}
    std::size_t record_index;
};

// Bad configuration: unknown key, out-of-bounds hyper-parameter, missing file path.
struct ConfigError : Error {
    using Error::Error;
};

// Corrupt or unsupported serialized file. Carries the byte offset of the failure.
struct FormatError : Error {
    FormatError(const std::string& msg, std::uint64_t offset)
        : Error(msg + " (at byte offset " + std::to_string(offset) + ")"), offset(offset) {}
    std::uint64_t offset;
};

}  // namespace absa
