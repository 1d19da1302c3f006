#include "cal/submodular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "cal/errors.hpp"

namespace cal {

namespace {
constexpr double kGainTol = 1e-12;
}

void SubmodularInstance::validate() const {
    const std::size_t n = ground.size();
    if (similarity.rows != n || similarity.cols != n)
        throw ShapeError("submodular instance: similarity must be n x n");
    if (uncertainty.size() != n)
        throw ShapeError("submodular instance: |h| != n");
    if (com_weight < 0.0)
        throw ContractError("submodular instance: negative com_weight");
    for (double h : uncertainty)
        if (h < 0.0) throw ContractError("submodular instance: negative uncertainty");
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(similarity(i, i) - 1.0) > 1e-12)
            throw ContractError("submodular instance: diagonal must be 1");
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(similarity(i, j) - similarity(j, i)) > 1e-12)
                throw ContractError("submodular instance: similarity not symmetric");
    }
}

double similarity_rbf(const std::vector<double>& z_i, const std::vector<double>& z_j,
                      double sigma) {
    if (z_i.size() != z_j.size())
        throw ShapeError("similarity_rbf: length mismatch");
    if (sigma <= 0.0)
        throw ContractError("similarity_rbf: sigma must be positive");
    double d2 = squared_distance(z_i.data(), z_j.data(), z_i.size());
    return std::exp(-d2 / (2.0 * sigma * sigma));
}

Matrix rbf_similarity_matrix(const Matrix& embeddings, double sigma) {
    if (sigma <= 0.0)
        throw ContractError("rbf_similarity_matrix: sigma must be positive");
    const std::size_t n = embeddings.rows;
    Matrix W(n, n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double d2 = squared_distance(embeddings.row(i), embeddings.row(j),
                                         embeddings.cols);
            double w = std::exp(-d2 / (2.0 * sigma * sigma));
            W(i, j) = w;
            W(j, i) = w;
        }
    return W;
}

double eval_objective(const SubmodularInstance& inst, const std::vector<std::size_t>& S) {
    const std::size_t n = inst.size();
    for (std::size_t j : S)
        if (j >= n)
            throw ContractError("eval_objective: position " + std::to_string(j) +
                                " outside ground set");
    if (S.empty()) return 0.0;

    double fl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = 0.0; // empty max convention keeps G(empty) = 0
        for (std::size_t j : S) best = std::max(best, inst.similarity(i, j));
        fl += best;
    }
    double hsum = 0.0;
    for (std::size_t j : S) hsum += inst.uncertainty[j];
    return fl + inst.com_weight * std::log1p(hsum);
}

namespace {

// Incremental gain state: cover[i] = max similarity from i into S.
struct GreedyState {
    const SubmodularInstance& inst;
    std::vector<double> cover;
    double hsum = 0.0;

    explicit GreedyState(const SubmodularInstance& i)
        : inst(i), cover(i.size(), 0.0) {}

    double gain(std::size_t j) const {
        double g = 0.0;
        const std::size_t n = inst.size();
        for (std::size_t i = 0; i < n; ++i) {
            double w = inst.similarity(i, j);
            if (w > cover[i]) g += w - cover[i];
        }
        g += inst.com_weight *
             (std::log1p(hsum + inst.uncertainty[j]) - std::log1p(hsum));
        return g;
    }

    void add(std::size_t j) {
        const std::size_t n = inst.size();
        for (std::size_t i = 0; i < n; ++i)
            cover[i] = std::max(cover[i], inst.similarity(i, j));
        hsum += inst.uncertainty[j];
    }
};

void check_greedy_pre(const SubmodularInstance& inst, std::size_t k) {
    inst.validate();
    if (inst.size() == 0)
        throw ContractError("greedy_maximize: empty ground set");
    if (k == 0)
        throw ContractError("greedy_maximize: k must be >= 1");
}

} // namespace

GreedyResult greedy_maximize_naive(const SubmodularInstance& inst, std::size_t k) {
    check_greedy_pre(inst, k);
    const std::size_t n = inst.size();
    k = std::min(k, n);

    GreedyState state(inst);
    std::vector<char> taken(n, 0);
    std::vector<double> gains(n, 0.0);
    GreedyResult out;
    for (std::size_t round = 0; round < k; ++round) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (taken[j]) continue;
            gains[j] = state.gain(j);
            best = std::max(best, gains[j]);
        }
        // Everything within the tolerance window ties; smallest index wins.
        std::size_t pick = n;
        for (std::size_t j = 0; j < n; ++j)
            if (!taken[j] && gains[j] >= best - kGainTol) {
                pick = j;
                break;
            }
        taken[pick] = 1;
        state.add(pick);
        out.selected.push_back(pick);
        out.gains.push_back(gains[pick]);
    }
    return out;
}

GreedyResult greedy_maximize(const SubmodularInstance& inst, std::size_t k) {
    check_greedy_pre(inst, k);
    const std::size_t n = inst.size();
    k = std::min(k, n);

    GreedyState state(inst);
    GreedyResult out;

    // Max-heap of (stale upper bound on gain, position). Submodularity makes
    // old gains valid upper bounds, so an element whose stale gain falls more
    // than kGainTol below the freshest best can neither win nor tie.
    using Entry = std::pair<double, std::size_t>;
    auto cmp = [](const Entry& a, const Entry& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second; // smaller position on top among equals
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
    for (std::size_t j = 0; j < n; ++j) heap.push({state.gain(j), j});

    std::vector<char> taken(n, 0);
    for (std::size_t round = 0; round < k; ++round) {
        std::vector<Entry> fresh;
        double best = -std::numeric_limits<double>::infinity();
        while (!heap.empty() && heap.top().first >= best - kGainTol) {
            auto [stale, j] = heap.top();
            heap.pop();
            if (taken[j]) continue;
            double g = round == 0 ? stale : state.gain(j); // initial gains are exact
            fresh.push_back({g, j});
            best = std::max(best, g);
        }
        std::size_t pick = n;
        double pick_gain = 0.0;
        for (const auto& [g, j] : fresh)
            if (g >= best - kGainTol && (pick == n || j < pick)) {
                pick = j;
                pick_gain = g;
            }
        for (const auto& [g, j] : fresh)
            if (j != pick) heap.push({g, j});
        taken[pick] = 1;
        state.add(pick);
        out.selected.push_back(pick);
        out.gains.push_back(pick_gain);
    }
    return out;
}

BruteForceResult brute_force_maximize(const SubmodularInstance& inst, std::size_t k) {
    check_greedy_pre(inst, k);
    const std::size_t n = inst.size();
    k = std::min(k, n);

    double combos = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        combos *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (combos > 1e6)
        throw ContractError("brute_force_maximize: C(n,k) exceeds 10^6");

    BruteForceResult out;
    out.best_value = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> S(k);
    for (std::size_t i = 0; i < k; ++i) S[i] = i;

    auto consider = [&](const std::vector<std::size_t>& cand) {
        double v = eval_objective(inst, cand);
        // first lexicographic visitor wins ties by construction
        if (v > out.best_value + kGainTol) {
            out.best_value = v;
            out.best_set = cand;
        }
    };

    // Enumerate k-subsets in lexicographic order.
    while (true) {
        consider(S);
        std::size_t i = k;
        while (i-- > 0) {
            if (S[i] != i + n - k) {
                ++S[i];
                for (std::size_t j = i + 1; j < k; ++j) S[j] = S[j - 1] + 1;
                break;
            }
            if (i == 0) return out;
        }
    }
}

} // namespace cal
