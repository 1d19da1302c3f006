#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cal/data_gen.hpp"
#include "cal/eval.hpp"
#include "cal/orchestrator.hpp"

namespace cal {

// acc / baseline_acc; the baseline's own relative accuracy is 1 by construction.
double relative_accuracy(double acc, double baseline_acc);

enum class SpeedupBasis { wallclock, gradsteps };

// Per-budget ratio of cumulative baseline cost to cumulative method cost.
// Both reports must follow the same budget schedule.
std::vector<double> compute_speedup(const RunReport& baseline, const RunReport& method,
                                    SpeedupBasis basis);

// "2.8x" style rendering used in tables.
std::string render_speedup(double speedup);

// Sample Pearson correlation; throws NumericError when either input has zero
// variance.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Entry (i, t) = accuracy on task i+1 after round t+1; NaN marks the
// undefined upper triangle (t < i). NaN cells are never emitted to files.
Matrix forgetting_matrix(const RunReport& report);

// Accuracy per (corruption kind, severity 1..5) plus the clean accuracy.
// The last row is the per-severity mean over kinds.
struct RobustnessReport {
    double clean_accuracy = 0.0;
    std::vector<std::string> kind_names; // 4 kinds then "mean"
    Matrix accuracies;                   // (kinds+1) x 5
};

RobustnessReport robustness_suite(const ModelParams& model, const Dataset& clean_test,
                                  std::uint64_t seed);

struct MethodBudgetCell {
    std::string method;
    std::size_t round = 0;
    std::size_t labeled_size = 0;
    double acc_mean = 0.0;
    double acc_std = 0.0;
    double rel_acc = 1.0;
    double speedup_wall = 1.0;
    double speedup_steps = 1.0;
};

struct CorrelationCell {
    std::string method;
    std::size_t round = 0;
    double r_mean = 0.0;
    std::vector<double> r_per_seed;
};

struct MethodForgetting {
    std::string method;
    Matrix mean_matrix; // NaN-masked mean over seeds
};

struct MethodRobustness {
    std::string method;
    RobustnessReport mean; // entrywise mean over seeds
};

struct BenchSummary {
    std::string fixture;
    std::string baseline = "al";
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> budgets; // labeled size per round
    std::vector<MethodBudgetCell> cells;
    std::vector<CorrelationCell> correlations; // vs baseline, CAL methods only
    std::vector<MethodForgetting> forgetting;
    std::vector<MethodRobustness> robustness;
};

// Aggregates already-computed reports (e.g. reloaded from disk) into a
// summary; every method must cover the same seed set and schedule. The
// robustness section stays empty since models are gone.
BenchSummary summarize_reports(const std::vector<RunReport>& reports,
                               const std::string& baseline = "al");

// Runs every (method, seed) pair (in parallel when jobs > 1; runs have fully
// isolated state so results are independent of scheduling) and aggregates.
// The baseline method must be part of `methods`.
BenchSummary bench_run(const RunConfig& config, const std::vector<MethodSpec>& methods,
                       const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

// One summary per grid assignment (Cartesian product), each run with the same
// seeds. Keys are dotted config paths, e.g. "strategy.alpha".
struct SweepPoint {
    std::string assignment; // "strategy.alpha=0.25", "" for the base point
    BenchSummary summary;
};

std::vector<SweepPoint> sweep(const RunConfig& base,
                              const std::vector<std::pair<std::string, std::vector<double>>>& grid,
                              const std::vector<MethodSpec>& methods,
                              const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

// Numeric config assignment by dotted path; ConfigError names unknown keys.
void apply_config_value(RunConfig& config, const std::string& key, double value);

// Writes summary.json, accuracy.csv, speedup.csv, correlation.csv and
// forgetting.csv with stable ordering; all numeric fields must be finite.
void emit_report(const std::vector<SweepPoint>& summaries, const std::string& out_dir);

} // namespace cal
