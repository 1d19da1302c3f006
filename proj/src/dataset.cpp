#include "cal/dataset.hpp"

#include <algorithm>
#include <string>

#include "cal/errors.hpp"

namespace cal {

void Dataset::validate() const {
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const Example& e = examples[i];
        if (e.features.size() != d)
            throw ContractError("dataset " + name + ": example " + std::to_string(i) +
                                " has dim " + std::to_string(e.features.size()));
        if (e.label < 0 || static_cast<std::size_t>(e.label) >= k)
            throw ContractError("dataset " + name + ": example " + std::to_string(i) +
                                " label out of range");
        if (!all_finite(e.features))
            throw ContractError("dataset " + name + ": non-finite feature at " +
                                std::to_string(i));
        if (!e.stored_logits.empty()) {
            if (e.stored_logits.size() != k)
                throw ContractError("dataset " + name + ": stored logits length != k at " +
                                    std::to_string(i));
            if (!all_finite(e.stored_logits))
                throw ContractError("dataset " + name + ": non-finite stored logits at " +
                                    std::to_string(i));
        }
    }
}

Matrix features_of(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Matrix X(indices.size(), ds.d);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const Example& e = ds.examples.at(indices[r]);
        std::copy(e.features.begin(), e.features.end(), X.row(r));
    }
    return X;
}

std::vector<int> labels_of(const Dataset& ds, const std::vector<std::size_t>& indices) {
    std::vector<int> y(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r)
        y[r] = ds.examples.at(indices[r]).label;
    return y;
}

PoolState PoolState::fresh(std::size_t n) {
    PoolState p;
    p.unlabeled.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.unlabeled[i] = i;
    return p;
}

void PoolState::label(const std::vector<std::size_t>& picked) {
    std::vector<std::size_t> sorted = picked;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ContractError("PoolState::label: duplicate index in selection");

    std::vector<std::size_t> remaining;
    remaining.reserve(unlabeled.size() - sorted.size());
    std::size_t matched = 0;
    std::size_t si = 0;
    for (std::size_t u : unlabeled) {
        while (si < sorted.size() && sorted[si] < u) ++si;
        if (si < sorted.size() && sorted[si] == u) {
            ++matched;
            ++si;
        } else {
            remaining.push_back(u);
        }
    }
    if (matched != sorted.size())
        throw ContractError("PoolState::label: selection contains non-pool index");
    unlabeled = std::move(remaining);
    tasks.push_back(picked);
}

std::vector<std::size_t> PoolState::history_flat(std::size_t t_exclusive) const {
    std::vector<std::size_t> out;
    std::size_t upto = std::min(t_exclusive, tasks.size());
    for (std::size_t t = 0; t < upto; ++t)
        out.insert(out.end(), tasks[t].begin(), tasks[t].end());
    return out;
}

std::size_t PoolState::labeled_count() const {
    std::size_t n = 0;
    for (const auto& t : tasks) n += t.size();
    return n;
}

bool PoolState::partition_valid(std::size_t n) const {
    std::vector<char> seen(n, 0);
    auto mark = [&](std::size_t i) {
        if (i >= n || seen[i]) return false;
        seen[i] = 1;
        return true;
    };
    for (std::size_t u : unlabeled)
        if (!mark(u)) return false;
    for (const auto& task : tasks)
        for (std::size_t i : task)
            if (!mark(i)) return false;
    return unlabeled.size() + labeled_count() == n;
}

} // namespace cal
