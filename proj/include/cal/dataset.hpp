#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cal/matrix.hpp"

namespace cal {

// One data point. stored_logits is empty until a distillation strategy
// records z' for the sample; task_id is -1 until the point is labeled.
struct Example {
    std::vector<double> features;
    int label = 0;
    std::vector<double> stored_logits;
    int task_id = -1;
};

struct Dataset {
    std::vector<Example> examples;
    std::size_t d = 0;
    std::size_t k = 0;
    std::string name;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }

    // Throws ContractError if any example violates the d/k invariants.
    void validate() const;
};

// Batch matrix for a subset of the dataset, one example per row.
Matrix features_of(const Dataset& ds, const std::vector<std::size_t>& indices);
std::vector<int> labels_of(const Dataset& ds, const std::vector<std::size_t>& indices);

inline std::vector<std::size_t> all_indices(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

// Partition of a base dataset into the unlabeled pool and the ordered task
// sets D_1..D_t. Every base index lives in exactly one place.
struct PoolState {
    std::vector<std::size_t> unlabeled;          // kept sorted ascending
    std::vector<std::vector<std::size_t>> tasks; // D_1..D_t in labeling order

    static PoolState fresh(std::size_t n);

    // Moves `picked` (base indices, must be unlabeled) into a new task set.
    void label(const std::vector<std::size_t>& picked);

    // D_1..D_{t-1} flattened in task order; t_exclusive counts tasks to keep.
    std::vector<std::size_t> history_flat(std::size_t t_exclusive) const;

    std::size_t labeled_count() const;

    // Checks disjointness and exhaustiveness against a base of size n.
    bool partition_valid(std::size_t n) const;
};

} // namespace cal
