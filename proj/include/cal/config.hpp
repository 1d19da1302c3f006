#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cal/acquisition.hpp"
#include "cal/convergence.hpp"
#include "cal/data_gen.hpp"
#include "cal/replay.hpp"

namespace cal {

struct DatasetSpec {
    enum class Kind { blobs, drift, csv };
    Kind kind = Kind::blobs;
    std::uint64_t seed = 7;
    // blobs
    std::size_t classes = 8;
    std::size_t per_class = 625;
    std::size_t dim = 2;
    double spread = 0.15;
    // drift
    std::size_t tasks = 5;
    std::size_t per_task = 300;
    double drift = 0.4;
    // csv
    std::string csv_path;
};

// Round budgets, as absolute counts or pool fractions. When counts is empty
// the schedule is seed_fraction + (rounds-1) * increment_fraction.
struct BudgetSpec {
    std::vector<std::size_t> counts;
    double seed_fraction = 0.1;
    double increment_fraction = 0.1;
    std::size_t rounds = 3;
};

// Fully-resolved run configuration; parse_config fills defaults and every
// report echoes the resolved value.
struct RunConfig {
    DatasetSpec dataset;
    SplitFractions split;
    bool normalize_features = true;
    std::vector<std::size_t> hidden_dims = {32};
    BudgetSpec budget;
    AcquisitionChoice acquisition;
    StrategyConfig strategy;
    ConvergencePolicy convergence;
    std::vector<std::uint64_t> seeds = {1};
    std::string out_dir = "out";
};

// Reads and validates a JSON config. Unknown keys, type mismatches, and
// constraint violations throw ConfigError naming the JSON path.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

} // namespace cal
