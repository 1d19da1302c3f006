#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cal/convergence.hpp"
#include "cal/dataset.hpp"
#include "cal/nn.hpp"

namespace cal {

enum class Strategy { er, mir, der, sd, sds2 };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct StrategyConfig {
    Strategy strategy = Strategy::er;
    std::size_t m = 32;       // current-batch size
    std::size_t m_h = 64;     // replay-batch size, default 2m
    double alpha = 0.25;      // der: MSE weight; sd/sds2: KL mixing weight
    double beta = 1.0;        // der: replay classification weight
    double sigma = 1.0;       // sds2: RBF bandwidth
    double lambda_com = 1.0;  // sds2: concave-over-modular weight
    std::size_t c = 128;      // mir/sds2: candidate subsample size
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.0;

    void validate() const; // throws ContractError on out-of-range fields
};

// Replay batch: positions into the flattened history (D_1..D_{t-1} in task
// order) plus the base-dataset indices they map to.
struct ReplayBatch {
    std::vector<std::size_t> history_positions;
    std::vector<std::size_t> base_indices;
};

// Freezes z' = g(x; theta) onto every member of a just-trained task. A second
// write to the same example is a contract error: stored logits are write-once.
void record_task_logits(const ModelParams& model, Dataset& ds,
                        const std::vector<std::size_t>& task_indices);

class Rng;

// Uniform without replacement; falls back to with-replacement draws only for
// the overflow when m_h exceeds the history size.
ReplayBatch replay_uniform(const Dataset& ds, const std::vector<std::size_t>& history,
                           std::size_t m_h, Rng& rng);

// MIR: score c uniform candidates by the loss change after a virtual SGD step
// on the current batch (post - pre; positive = most interfered), keep the top
// m_h. The model is not modified.
ReplayBatch replay_mir(const ModelParams& model, const Dataset& ds,
                       const std::vector<std::size_t>& history,
                       const std::vector<std::size_t>& current_batch,
                       const StrategyConfig& cfg, Rng& rng);

// SDS2: subsample c candidates, embed them under the current model, and pick
// m_h that are jointly diverse (facility location on penultimate embeddings)
// and uncertain (concave-over-modular on entropy).
ReplayBatch replay_sds2(const ModelParams& model, const Dataset& ds,
                        const std::vector<std::size_t>& history,
                        const StrategyConfig& cfg, Rng& rng);

// Stability/plasticity weight: |D_t| / (|D_t| + |D_{1:t-1}|).
double lambda_schedule(std::size_t size_current, std::size_t size_history);

struct LossEval {
    double value = 0.0;
    Gradients grads;
};

// L_c + mean_replay[ alpha ||g - z'||^2 + beta CE ].
LossEval loss_der(const ModelParams& model, const Dataset& ds,
                  const std::vector<std::size_t>& current,
                  const std::vector<std::size_t>& replay, double alpha, double beta);

// lambda_t L_c + (1 - lambda_t) mean_replay[ alpha KL(softmax(z')||f) + (1-alpha) CE ].
LossEval loss_sd(const ModelParams& model, const Dataset& ds,
                 const std::vector<std::size_t>& current,
                 const std::vector<std::size_t>& replay, double alpha, double lambda_t);

struct TrainResult {
    ModelParams model;
    std::size_t steps = 0;  // gradient steps taken in this call
    std::size_t epochs = 0;
    std::vector<double> metric_history; // training accuracy on `current` per epoch
};

// One round of replay-based continual training (plain supervised training
// when history is empty or m_h = 0). Epochs sweep `current` shuffled without
// replacement; every step draws a fresh replay batch per the strategy.
TrainResult continual_train(ModelParams model, const Dataset& ds,
                            const std::vector<std::size_t>& current,
                            const std::vector<std::size_t>& history,
                            const StrategyConfig& cfg, const ConvergencePolicy& policy,
                            std::uint64_t seed);

} // namespace cal
