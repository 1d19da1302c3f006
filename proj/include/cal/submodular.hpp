#pragma once

#include <cstddef>
#include <vector>

#include "cal/matrix.hpp"

namespace cal {

// Monotone submodular objective over a candidate set A of size n:
//   G(S) = sum_i max_{j in S} W(i,j) + com_weight * ln(1 + sum_{j in S} h_j)
// with the empty max defined as 0, so G(empty) = 0. Sets are positions
// 0..n-1 into the instance; `ground` carries the caller's original ids.
struct SubmodularInstance {
    std::vector<std::size_t> ground; // original ids, |ground| = n
    Matrix similarity;               // n x n, symmetric, diag 1
    std::vector<double> uncertainty; // h, nonnegative, length n
    double com_weight = 0.0;         // lambda >= 0

    std::size_t size() const { return ground.size(); }
    void validate() const;
};

// w_ij = exp(-||z_i - z_j||^2 / (2 sigma^2)).
double similarity_rbf(const std::vector<double>& z_i, const std::vector<double>& z_j,
                      double sigma);

// Pairwise RBF similarity matrix over embedding rows.
Matrix rbf_similarity_matrix(const Matrix& embeddings, double sigma);

double eval_objective(const SubmodularInstance& inst, const std::vector<std::size_t>& S);

struct GreedyResult {
    std::vector<std::size_t> selected; // positions, in pick order
    std::vector<double> gains;         // marginal gain of each pick
};

// Cardinality-constrained greedy with lazy (priority queue) evaluation.
// Gains within 1e-12 count as ties; ties break toward the smaller position,
// so the result matches naive re-evaluation exactly.
GreedyResult greedy_maximize(const SubmodularInstance& inst, std::size_t k);

// Naive variant (full re-evaluation every round); test reference.
GreedyResult greedy_maximize_naive(const SubmodularInstance& inst, std::size_t k);

struct BruteForceResult {
    std::vector<std::size_t> best_set; // sorted positions
    double best_value = 0.0;
};

// Exhaustive maximizer; requires C(n, k) <= 10^6. Ties go to the
// lexicographically smallest set.
BruteForceResult brute_force_maximize(const SubmodularInstance& inst, std::size_t k);

} // namespace cal
