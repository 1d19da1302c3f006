#pragma once

#include <string>

#include "cal/dataset.hpp"

namespace cal {

// CSV schema: header "f0,...,f{d-1},label", features as decimal literals,
// label a nonnegative integer, UTF-8 with LF line endings. d is taken from
// the header, k = max label + 1.
Dataset load_csv(const std::string& path);

// Features printed at 17 significant digits so a load round-trips bit-exactly.
void save_csv(const Dataset& ds, const std::string& path);

} // namespace cal
