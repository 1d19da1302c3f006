#include "cal/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cal/acquisition.hpp"
#include "cal/errors.hpp"
#include "cal/eval.hpp"
#include "cal/rng.hpp"
#include "cal/submodular.hpp"

namespace cal {

const char* strategy_name(Strategy s) {
    switch (s) {
    case Strategy::er: return "er";
    case Strategy::mir: return "mir";
    case Strategy::der: return "der";
    case Strategy::sd: return "sd";
    case Strategy::sds2: return "sds2";
    }
    return "?";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "er") return Strategy::er;
    if (name == "mir") return Strategy::mir;
    if (name == "der") return Strategy::der;
    if (name == "sd") return Strategy::sd;
    if (name == "sds2") return Strategy::sds2;
    throw ContractError("unknown strategy '" + name + "'");
}

void StrategyConfig::validate() const {
    if (m == 0) throw ContractError("strategy config: m must be >= 1");
    if (lr <= 0.0) throw ContractError("strategy config: lr must be positive");
    if (momentum < 0.0 || momentum >= 1.0)
        throw ContractError("strategy config: momentum must be in [0,1)");
    if (weight_decay < 0.0)
        throw ContractError("strategy config: negative weight_decay");
    switch (strategy) {
    case Strategy::der:
        if (alpha < 0.0 || beta < 0.0)
            throw ContractError("strategy config: der needs alpha, beta >= 0");
        break;
    case Strategy::sd:
    case Strategy::sds2:
        if (alpha < 0.0 || alpha > 1.0)
            throw ContractError("strategy config: sd/sds2 needs alpha in [0,1]");
        break;
    default:
        break;
    }
    if (strategy == Strategy::sds2) {
        if (sigma <= 0.0) throw ContractError("strategy config: sigma must be positive");
        if (lambda_com < 0.0)
            throw ContractError("strategy config: negative lambda_com");
    }
    if ((strategy == Strategy::mir || strategy == Strategy::sds2) && c < m_h)
        throw ContractError("strategy config: candidate size c must be >= m_h");
}

void record_task_logits(const ModelParams& model, Dataset& ds,
                        const std::vector<std::size_t>& task_indices) {
    if (model.num_classes() != ds.k)
        throw ContractError("record_task_logits: model head has " +
                            std::to_string(model.num_classes()) + " classes, dataset has " +
                            std::to_string(ds.k));
    Matrix logits = forward(model, features_of(ds, task_indices)).logits;
    for (std::size_t r = 0; r < task_indices.size(); ++r) {
        Example& e = ds.examples.at(task_indices[r]);
        if (!e.stored_logits.empty())
            throw ContractError("record_task_logits: stored logits are write-once "
                                "(example " + std::to_string(task_indices[r]) + ")");
        e.stored_logits.assign(logits.row(r), logits.row(r) + logits.cols);
    }
}

ReplayBatch replay_uniform(const Dataset& ds, const std::vector<std::size_t>& history,
                           std::size_t m_h, Rng& rng) {
    (void)ds;
    if (history.empty())
        throw ContractError("replay_uniform: empty history");
    ReplayBatch out;
    const std::size_t n = history.size();
    if (m_h <= n) {
        out.history_positions = rng.sample_without_replacement(n, m_h);
    } else {
        // whole history plus with-replacement overflow
        out.history_positions.resize(n);
        std::iota(out.history_positions.begin(), out.history_positions.end(), 0);
        rng.shuffle(out.history_positions);
        for (std::size_t i = n; i < m_h; ++i)
            out.history_positions.push_back(rng.uniform_below(n));
    }
    out.base_indices.reserve(out.history_positions.size());
    for (std::size_t p : out.history_positions) out.base_indices.push_back(history[p]);
    return out;
}

namespace {

// Per-row cross-entropy under the clamped log used everywhere.
std::vector<double> per_row_ce(const ModelParams& model, const Dataset& ds,
                               const std::vector<std::size_t>& indices) {
    Matrix probs = softmax_rows(forward(model, features_of(ds, indices)).logits);
    std::vector<double> out(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        int y = ds.examples[indices[r]].label;
        out[r] = -std::log(std::max(probs(r, static_cast<std::size_t>(y)), kProbEps));
    }
    return out;
}

Matrix gather_stored_logits(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Matrix z(indices.size(), ds.k);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const Example& e = ds.examples.at(indices[r]);
        if (e.stored_logits.empty())
            throw ContractError("replay member " + std::to_string(indices[r]) +
                                " has no stored logits");
        if (e.stored_logits.size() != ds.k)
            throw ContractError("stored logits length mismatch at " +
                                std::to_string(indices[r]));
        std::copy(e.stored_logits.begin(), e.stored_logits.end(), z.row(r));
    }
    return z;
}

Matrix concat_features(const Dataset& ds, const std::vector<std::size_t>& a,
                       const std::vector<std::size_t>& b) {
    Matrix X(a.size() + b.size(), ds.d);
    for (std::size_t r = 0; r < a.size(); ++r) {
        const auto& f = ds.examples[a[r]].features;
        std::copy(f.begin(), f.end(), X.row(r));
    }
    for (std::size_t r = 0; r < b.size(); ++r) {
        const auto& f = ds.examples[b[r]].features;
        std::copy(f.begin(), f.end(), X.row(a.size() + r));
    }
    return X;
}

std::vector<int> concat_labels(const Dataset& ds, const std::vector<std::size_t>& a,
                               const std::vector<std::size_t>& b) {
    std::vector<int> y;
    y.reserve(a.size() + b.size());
    for (std::size_t i : a) y.push_back(ds.examples[i].label);
    for (std::size_t i : b) y.push_back(ds.examples[i].label);
    return y;
}

} // namespace

ReplayBatch replay_mir(const ModelParams& model, const Dataset& ds,
                       const std::vector<std::size_t>& history,
                       const std::vector<std::size_t>& current_batch,
                       const StrategyConfig& cfg, Rng& rng) {
    if (history.empty())
        throw ContractError("replay_mir: empty history");
    const std::size_t n = history.size();
    const std::size_t n_cand = std::min(cfg.c, n);
    const std::size_t m_h = std::min(cfg.m_h, n_cand);

    std::vector<std::size_t> cand = rng.sample_without_replacement(n, n_cand);
    std::sort(cand.begin(), cand.end()); // canonical order for the tie rule
    std::vector<std::size_t> cand_base;
    cand_base.reserve(cand.size());
    for (std::size_t p : cand) cand_base.push_back(history[p]);

    // Virtual step theta_v = theta - eta * grad L_c(theta); momentum excluded.
    ForwardTrace trace = forward(model, features_of(ds, current_batch));
    BatchTargets targets;
    targets.labels = labels_of(ds, current_batch);
    targets.current_count = current_batch.size();
    Gradients g = backward(model, trace, LossSpec{LossKind::cross_entropy, 0, 0, 1},
                           targets);
    ModelParams virt = model;
    for (std::size_t l = 0; l < virt.layer_count(); ++l) {
        for (std::size_t i = 0; i < virt.weights[l].data.size(); ++i)
            virt.weights[l].data[i] -= cfg.lr * g.weights[l].data[i];
        for (std::size_t i = 0; i < virt.biases[l].size(); ++i)
            virt.biases[l][i] -= cfg.lr * g.biases[l][i];
    }

    std::vector<double> pre = per_row_ce(model, ds, cand_base);
    std::vector<double> post = per_row_ce(virt, ds, cand_base);

    // score = loss increase after the virtual step; highest first, ties toward
    // the smaller history position (candidates are already sorted).
    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return (post[a] - pre[a]) > (post[b] - pre[b]);
    });

    ReplayBatch out;
    for (std::size_t i = 0; i < m_h; ++i) {
        out.history_positions.push_back(cand[order[i]]);
        out.base_indices.push_back(cand_base[order[i]]);
    }
    return out;
}

ReplayBatch replay_sds2(const ModelParams& model, const Dataset& ds,
                        const std::vector<std::size_t>& history,
                        const StrategyConfig& cfg, Rng& rng) {
    if (history.empty())
        throw ContractError("replay_sds2: empty history");
    const std::size_t n = history.size();
    const std::size_t n_cand = std::min(cfg.c, n);
    const std::size_t m_h = std::min(cfg.m_h, n_cand);

    std::vector<std::size_t> cand = rng.sample_without_replacement(n, n_cand);
    std::sort(cand.begin(), cand.end());
    std::vector<std::size_t> cand_base;
    cand_base.reserve(cand.size());
    for (std::size_t p : cand) cand_base.push_back(history[p]);

    // Embeddings and entropies only for the subsample, never the full history.
    ForwardTrace trace = forward(model, features_of(ds, cand_base));
    Matrix probs = softmax_rows(trace.logits);
    SubmodularInstance inst;
    inst.ground = cand;
    inst.similarity = rbf_similarity_matrix(trace.penultimate, cfg.sigma);
    inst.uncertainty.resize(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i)
        inst.uncertainty[i] = score_entropy_row(probs.row(i), probs.cols);
    inst.com_weight = cfg.lambda_com;

    GreedyResult greedy = greedy_maximize(inst, m_h);
    ReplayBatch out;
    for (std::size_t pos : greedy.selected) {
        out.history_positions.push_back(cand[pos]);
        out.base_indices.push_back(cand_base[pos]);
    }
    return out;
}

double lambda_schedule(std::size_t size_current, std::size_t size_history) {
    if (size_current == 0)
        throw ContractError("lambda_schedule: current task is empty");
    return static_cast<double>(size_current) /
           static_cast<double>(size_current + size_history);
}

namespace {

LossEval composite_loss(const ModelParams& model, const Dataset& ds,
                        const std::vector<std::size_t>& current,
                        const std::vector<std::size_t>& replay, const LossSpec& spec) {
    Matrix X = concat_features(ds, current, replay);
    BatchTargets targets;
    targets.labels = concat_labels(ds, current, replay);
    targets.current_count = current.size();
    if (spec.kind != LossKind::cross_entropy)
        targets.replay_logits = gather_stored_logits(ds, replay);
    ForwardTrace trace = forward(model, X);
    LossEval out;
    out.value = loss_value(spec, trace.logits, targets);
    out.grads = backward(model, trace, spec, targets);
    return out;
}

} // namespace

LossEval loss_der(const ModelParams& model, const Dataset& ds,
                  const std::vector<std::size_t>& current,
                  const std::vector<std::size_t>& replay, double alpha, double beta) {
    return composite_loss(model, ds, current, replay,
                          LossSpec{LossKind::der, alpha, beta, 1.0});
}

LossEval loss_sd(const ModelParams& model, const Dataset& ds,
                 const std::vector<std::size_t>& current,
                 const std::vector<std::size_t>& replay, double alpha, double lambda_t) {
    if (lambda_t <= 0.0 || lambda_t > 1.0)
        throw ContractError("loss_sd: lambda_t must be in (0,1]");
    return composite_loss(model, ds, current, replay,
                          LossSpec{LossKind::sd, alpha, 0.0, lambda_t});
}

TrainResult continual_train(ModelParams model, const Dataset& ds,
                            const std::vector<std::size_t>& current,
                            const std::vector<std::size_t>& history,
                            const StrategyConfig& cfg, const ConvergencePolicy& policy,
                            std::uint64_t seed) {
    cfg.validate();
    if (current.empty())
        throw ContractError("continual_train: empty current task");

    const bool use_replay = !history.empty() && cfg.m_h > 0;
    const double lambda_t = lambda_schedule(current.size(), history.size());
    Rng replay_rng(derive_seed(seed, 0, "replay"));

    TrainResult result;
    result.model = std::move(model);

    for (std::size_t epoch = 1;; ++epoch) {
        Rng shuffle_rng(derive_seed(seed, epoch, "shuffle"));
        std::vector<std::size_t> order = current;
        shuffle_rng.shuffle(order);

        for (std::size_t start = 0; start < order.size(); start += cfg.m) {
            std::size_t stop = std::min(start + cfg.m, order.size());
            std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);

            LossEval step;
            if (!use_replay) {
                step = composite_loss(result.model, ds, batch, {},
                                      LossSpec{LossKind::cross_entropy, 0, 0, 1});
            } else {
                switch (cfg.strategy) {
                case Strategy::er: {
                    ReplayBatch rb = replay_uniform(ds, history, cfg.m_h, replay_rng);
                    step = composite_loss(result.model, ds, batch, rb.base_indices,
                                          LossSpec{LossKind::cross_entropy, 0, 0, 1});
                    break;
                }
                case Strategy::mir: {
                    ReplayBatch rb =
                        replay_mir(result.model, ds, history, batch, cfg, replay_rng);
                    step = composite_loss(result.model, ds, batch, rb.base_indices,
                                          LossSpec{LossKind::cross_entropy, 0, 0, 1});
                    break;
                }
                case Strategy::der: {
                    ReplayBatch rb = replay_uniform(ds, history, cfg.m_h, replay_rng);
                    step = loss_der(result.model, ds, batch, rb.base_indices, cfg.alpha,
                                    cfg.beta);
                    break;
                }
                case Strategy::sd: {
                    ReplayBatch rb = replay_uniform(ds, history, cfg.m_h, replay_rng);
                    step = loss_sd(result.model, ds, batch, rb.base_indices, cfg.alpha,
                                   lambda_t);
                    break;
                }
                case Strategy::sds2: {
                    ReplayBatch rb = replay_sds2(result.model, ds, history, cfg, replay_rng);
                    step = loss_sd(result.model, ds, batch, rb.base_indices, cfg.alpha,
                                   lambda_t);
                    break;
                }
                }
            }
            result.model = sgd_step(std::move(result.model), step.grads, cfg.lr,
                                    cfg.momentum, cfg.weight_decay);
            ++result.steps;
        }

        result.metric_history.push_back(eval_accuracy_subset(result.model, ds, current));
        result.epochs = epoch;
        if (check_converged(result.metric_history, policy)) break;
    }
    return result;
}

} // namespace cal
