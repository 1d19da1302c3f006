#pragma once

#include <stdexcept>
#include <string>

namespace cal {

// Precondition or invariant violated by the caller.
struct ContractError : std::invalid_argument {
    explicit ContractError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Dimension mismatch between tensors/batches.
struct ShapeError : ContractError {
    explicit ShapeError(const std::string& msg) : ContractError(msg) {}
};

// Malformed external input (CSV cell, JSON value).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally inconsistent external input (row width, missing column).
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid run configuration; message names the offending JSON path.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value where a finite one is required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cal
