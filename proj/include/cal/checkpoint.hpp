#pragma once

#include <string>

#include "cal/nn.hpp"

namespace cal {

// Binary model checkpoint, version 1: magic "CALM", u32 version, u32 layer
// count, u64 dims, then row-major doubles (weights, biases, momentum per
// layer), all little-endian.
void save_model(const ModelParams& model, const std::string& path);
ModelParams load_model(const std::string& path);

} // namespace cal
