#include "cal/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cal/errors.hpp"
#include "cal/rng.hpp"
#include "cal/submodular.hpp"

namespace cal {

const char* acquisition_name(AcquisitionPolicy policy) {
    switch (policy) {
    case AcquisitionPolicy::random: return "random";
    case AcquisitionPolicy::entropy: return "entropy";
    case AcquisitionPolicy::margin: return "margin";
    case AcquisitionPolicy::fass: return "fass";
    }
    return "?";
}

double score_entropy_row(const double* probs, std::size_t k) {
    double h = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
    return h;
}

double score_entropy(const std::vector<double>& probs) {
    return score_entropy_row(probs.data(), probs.size());
}

double score_margin(const std::vector<double>& probs) {
    if (probs.size() < 2)
        throw ContractError("score_margin: need at least 2 classes");
    double top = -1.0, second = -1.0;
    for (double p : probs) {
        if (p > top) {
            second = top;
            top = p;
        } else if (p > second) {
            second = p;
        }
    }
    return 1.0 - (top - second);
}

std::vector<std::size_t> select_top_b(const std::vector<double>& scores, std::size_t b) {
    if (scores.empty())
        throw ContractError("select_top_b: empty pool");
    if (b == 0)
        throw ContractError("select_top_b: b must be >= 1");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        return scores[a] > scores[c]; // stable keeps ties in index order
    });
    order.resize(std::min(b, order.size()));
    return order;
}

std::vector<std::size_t> select_random(const std::vector<std::size_t>& U, std::size_t b,
                                       std::uint64_t seed) {
    Rng rng(seed);
    auto positions = rng.sample_without_replacement(U.size(), std::min(b, U.size()));
    std::vector<std::size_t> out;
    out.reserve(positions.size());
    for (std::size_t p : positions) out.push_back(U[p]);
    return out;
}

std::vector<std::size_t> select_fass(const ModelParams& model, const Dataset& ds,
                                     const std::vector<std::size_t>& U, std::size_t b,
                                     double c, double sigma) {
    if (U.empty())
        throw ContractError("select_fass: empty pool");
    if (c < 1.0)
        throw ContractError("select_fass: c must be >= 1");

    ForwardTrace trace = forward(model, features_of(ds, U));
    Matrix probs = softmax_rows(trace.logits);
    std::vector<double> entropy(U.size());
    for (std::size_t i = 0; i < U.size(); ++i)
        entropy[i] = score_entropy_row(probs.row(i), probs.cols);

    std::size_t stage1 = static_cast<std::size_t>(std::ceil(c * static_cast<double>(b)));
    stage1 = std::min(std::max(stage1, b), U.size());
    std::vector<std::size_t> cand = select_top_b(entropy, stage1); // positions in U
    // Canonical ordering so greedy ties break toward the smaller pool index.
    std::sort(cand.begin(), cand.end());

    Matrix emb(cand.size(), trace.penultimate.cols);
    for (std::size_t r = 0; r < cand.size(); ++r)
        std::copy(trace.penultimate.row(cand[r]),
                  trace.penultimate.row(cand[r]) + trace.penultimate.cols, emb.row(r));

    SubmodularInstance inst;
    inst.ground = cand;
    inst.similarity = rbf_similarity_matrix(emb, sigma);
    inst.uncertainty.assign(cand.size(), 0.0);
    inst.com_weight = 0.0; // pure facility location for the second stage
    GreedyResult greedy = greedy_maximize(inst, std::min(b, cand.size()));

    std::vector<std::size_t> out;
    out.reserve(greedy.selected.size());
    for (std::size_t pos : greedy.selected) out.push_back(U[cand[pos]]);
    return out;
}

std::vector<std::size_t> select_acquisition(const AcquisitionChoice& choice,
                                            const ModelParams& model, const Dataset& ds,
                                            const std::vector<std::size_t>& U,
                                            std::size_t b, std::uint64_t seed) {
    if (U.empty())
        throw ContractError("select_acquisition: empty pool");
    switch (choice.policy) {
    case AcquisitionPolicy::random:
        return select_random(U, b, seed);
    case AcquisitionPolicy::entropy:
    case AcquisitionPolicy::margin: {
        Matrix probs = softmax_rows(forward(model, features_of(ds, U)).logits);
        std::vector<double> scores(U.size());
        for (std::size_t i = 0; i < U.size(); ++i) {
            if (choice.policy == AcquisitionPolicy::entropy) {
                scores[i] = score_entropy_row(probs.row(i), probs.cols);
            } else {
                std::vector<double> row(probs.row(i), probs.row(i) + probs.cols);
                scores[i] = score_margin(row);
            }
        }
        auto positions = select_top_b(scores, b);
        std::vector<std::size_t> out;
        out.reserve(positions.size());
        for (std::size_t p : positions) out.push_back(U[p]);
        return out;
    }
    case AcquisitionPolicy::fass:
        return select_fass(model, ds, U, b, choice.fass_c, choice.fass_sigma);
    }
    throw ContractError("select_acquisition: unknown policy");
}

} // namespace cal
