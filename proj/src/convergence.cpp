#include "cal/convergence.hpp"

#include "cal/errors.hpp"

namespace cal {

bool check_converged(const std::vector<double>& metric_history,
                     const ConvergencePolicy& policy) {
    if (metric_history.empty())
        throw ContractError("check_converged: empty metric history");
    if (metric_history.size() >= policy.max_epochs) return true;

    double best = metric_history.front();
    std::size_t stale = 0;
    for (std::size_t i = 1; i < metric_history.size(); ++i) {
        if (metric_history[i] >= best + policy.min_delta) {
            best = metric_history[i];
            stale = 0;
        } else {
            ++stale;
        }
    }
    return stale >= policy.patience;
}

} // namespace cal
