#pragma once

#include <cstddef>
#include <vector>

namespace cal {

// "Train until converged": stop when the training metric has not improved by
// at least min_delta for `patience` consecutive epochs, or at max_epochs.
struct ConvergencePolicy {
    std::size_t max_epochs = 100;
    std::size_t patience = 5;
    double min_delta = 0.001; // 0.1% training accuracy
};

bool check_converged(const std::vector<double>& metric_history,
                     const ConvergencePolicy& policy);

} // namespace cal
