#pragma once

#include <cstdint>
#include <vector>

#include "cal/dataset.hpp"

namespace cal {

// k Gaussian clusters with means sampled uniformly on the unit sphere,
// isotropic std `spread`. Deterministic per seed.
Dataset gen_blobs(std::size_t k, std::size_t n_per_class, std::size_t d,
                  double spread, std::uint64_t seed);

// Task sequence over a drifting distribution: task t's class means are the
// task-1 means rotated in the first coordinate plane by (t-1)*drift*15deg and
// translated by (t-1)*drift along a fixed random direction. Labels stay
// consistent across tasks; task_id is set on every example.
std::vector<Dataset> gen_drift_tasks(std::size_t k, std::size_t n_per_task,
                                     std::size_t d, std::size_t n_tasks,
                                     double drift, std::uint64_t seed,
                                     double spread = 0.15);

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

struct Split {
    Dataset train;
    Dataset val;
    Dataset test;
};

// Stratified, seeded split. Per-class counts land within one example of
// fraction * class size; zero fractions give empty parts.
Split split(const Dataset& ds, SplitFractions fractions, std::uint64_t seed);

struct NormStats {
    std::vector<double> mean;
    std::vector<double> std; // floored at 1e-8
};

// Standardizes the training set per feature and returns the stats; apply the
// same stats verbatim to val/test with apply_normalization.
std::pair<Dataset, NormStats> normalize(const Dataset& train);
Dataset apply_normalization(const Dataset& ds, const NormStats& stats);

enum class CorruptionKind { gaussian_noise, feature_dropout, scale_shift, quantize };

const char* corruption_name(CorruptionKind kind);

// Severity in 1..5. Magnitudes: noise std = 0.1*s, dropout rate = 0.1*s,
// scale factor = 1 + 0.2*s (with additive shift 0.1*s), quantization to
// 2^(7-s) levels. Labels and dataset size never change.
Dataset corrupt(const Dataset& ds, CorruptionKind kind, int severity,
                std::uint64_t seed);

} // namespace cal
