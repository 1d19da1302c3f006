#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cal/config.hpp"
#include "cal/dataset.hpp"
#include "cal/nn.hpp"

namespace cal {

enum class Method { al_cold, al_warm, naive_ft, cal };

struct MethodSpec {
    Method method = Method::al_cold;
    Strategy strategy = Strategy::er; // only read when method == cal
};

// Canonical CLI names: al, al-ws, naive-ft, cal-er, cal-mir, cal-der,
// cal-sd, cal-sds2.
std::string method_name(const MethodSpec& spec);
MethodSpec method_from_name(const std::string& name);

struct RoundRecord {
    std::size_t round = 0;
    std::size_t labeled_size = 0;
    std::vector<std::size_t> selected; // base indices labeled this round
    std::size_t grad_steps_cum = 0;
    std::size_t train_epochs = 0;
    double wall_ms = 0.0; // training side only; excluded from determinism
    double test_accuracy = 0.0;
    double val_accuracy = 0.0;
    std::vector<double> task_accuracies; // accuracy on task i, i = 1..round
    std::vector<double> val_entropies;   // per-example entropies on val
};

struct RunReport {
    std::string method;
    std::uint64_t seed = 0;
    RunConfig config; // fully-resolved echo
    std::vector<RoundRecord> rounds;
};

// Splits built once per config: train is the query pool. For drift datasets
// the per-task train indices script the rounds instead of acquisition.
struct Fixture {
    Dataset train;
    Dataset val;
    Dataset test;
    std::vector<std::vector<std::size_t>> scripted_tasks;
    std::vector<std::size_t> budget_counts; // b_1..b_T
};

Fixture build_fixture(const RunConfig& config);

// The outer loops (seed round, per-round training, acquisition, metrics).
RunReport run_method(const RunConfig& config, const MethodSpec& spec, std::uint64_t seed);

// Variant keeping the final model, e.g. for the robustness suite.
struct RunOutcome {
    RunReport report;
    ModelParams final_model;
};
RunOutcome run_method_full(const RunConfig& config, const MethodSpec& spec,
                           std::uint64_t seed);

RunReport run_al_cold(const RunConfig& config, std::uint64_t seed);
RunReport run_al_warm(const RunConfig& config, std::uint64_t seed);
RunReport run_naive_finetune(const RunConfig& config, std::uint64_t seed);
RunReport run_cal(const RunConfig& config, Strategy strategy, std::uint64_t seed);

} // namespace cal
