#pragma once

#include <cstdint>
#include <vector>

#include "cal/dataset.hpp"
#include "cal/nn.hpp"

namespace cal {

enum class AcquisitionPolicy { random, entropy, margin, fass };

struct AcquisitionChoice {
    AcquisitionPolicy policy = AcquisitionPolicy::entropy;
    double fass_c = 4.0;     // stage-1 multiplier, > 1
    double fass_sigma = 1.0; // RBF bandwidth for stage 2
};

const char* acquisition_name(AcquisitionPolicy policy);

// -sum p ln p with 0 ln 0 = 0; range [0, ln k].
double score_entropy(const std::vector<double>& probs);
double score_entropy_row(const double* probs, std::size_t k);

// 1 - (top prob - second prob); higher = more uncertain.
double score_margin(const std::vector<double>& probs);

// Positions of the b largest scores; ties break toward the smaller index.
std::vector<std::size_t> select_top_b(const std::vector<double>& scores, std::size_t b);

// b distinct members of U, uniform, seeded; b is clamped to |U|.
std::vector<std::size_t> select_random(const std::vector<std::size_t>& U, std::size_t b,
                                       std::uint64_t seed);

// FASS: keep the ceil(c*b) highest-entropy candidates, then greedily maximize
// facility location over their penultimate embeddings. Returns base-dataset
// indices drawn from U.
std::vector<std::size_t> select_fass(const ModelParams& model, const Dataset& ds,
                                     const std::vector<std::size_t>& U, std::size_t b,
                                     double c, double sigma);

// Dispatch on the configured policy; returns base-dataset indices from U.
std::vector<std::size_t> select_acquisition(const AcquisitionChoice& choice,
                                            const ModelParams& model, const Dataset& ds,
                                            const std::vector<std::size_t>& U,
                                            std::size_t b, std::uint64_t seed);

} // namespace cal
