#include "cal/orchestrator.hpp"

#include <chrono>
#include <cmath>

#include "cal/csv.hpp"
#include "cal/errors.hpp"
#include "cal/eval.hpp"
#include "cal/rng.hpp"

namespace cal {

std::string method_name(const MethodSpec& spec) {
    switch (spec.method) {
    case Method::al_cold: return "al";
    case Method::al_warm: return "al-ws";
    case Method::naive_ft: return "naive-ft";
    case Method::cal: return std::string("cal-") + strategy_name(spec.strategy);
    }
    return "?";
}

MethodSpec method_from_name(const std::string& name) {
    if (name == "al") return {Method::al_cold, Strategy::er};
    if (name == "al-ws") return {Method::al_warm, Strategy::er};
    if (name == "naive-ft") return {Method::naive_ft, Strategy::er};
    if (name.rfind("cal-", 0) == 0)
        return {Method::cal, strategy_from_name(name.substr(4))};
    throw ConfigError("unknown method '" + name + "'");
}

namespace {

std::vector<std::size_t> resolve_budget(const BudgetSpec& spec, std::size_t pool_size) {
    std::vector<std::size_t> counts = spec.counts;
    if (counts.empty()) {
        if (spec.rounds == 0)
            throw ConfigError("budget.rounds must be >= 1");
        counts.push_back(static_cast<std::size_t>(
            std::llround(spec.seed_fraction * static_cast<double>(pool_size))));
        for (std::size_t t = 1; t < spec.rounds; ++t)
            counts.push_back(static_cast<std::size_t>(
                std::llround(spec.increment_fraction * static_cast<double>(pool_size))));
    }
    std::size_t total = 0;
    for (std::size_t b : counts) {
        if (b == 0)
            throw ConfigError("budget: zero-sized round");
        total += b;
    }
    if (total > pool_size)
        throw ConfigError("budget " + std::to_string(total) + " exceeds pool of " +
                          std::to_string(pool_size));
    return counts;
}

} // namespace

Fixture build_fixture(const RunConfig& config) {
    Fixture fx;
    switch (config.dataset.kind) {
    case DatasetSpec::Kind::blobs: {
        Dataset full = gen_blobs(config.dataset.classes, config.dataset.per_class,
                                 config.dataset.dim, config.dataset.spread,
                                 config.dataset.seed);
        Split s = split(full, config.split, derive_seed(config.dataset.seed, 0, "split"));
        fx.train = std::move(s.train);
        fx.val = std::move(s.val);
        fx.test = std::move(s.test);
        fx.budget_counts = resolve_budget(config.budget, fx.train.size());
        break;
    }
    case DatasetSpec::Kind::csv: {
        Dataset full = load_csv(config.dataset.csv_path);
        Split s = split(full, config.split, derive_seed(config.dataset.seed, 0, "split"));
        fx.train = std::move(s.train);
        fx.val = std::move(s.val);
        fx.test = std::move(s.test);
        fx.budget_counts = resolve_budget(config.budget, fx.train.size());
        break;
    }
    case DatasetSpec::Kind::drift: {
        // Each task is split separately; the pooled train halves script the
        // rounds, so the schedule is the per-task train sizes.
        auto tasks = gen_drift_tasks(config.dataset.classes, config.dataset.per_task,
                                     config.dataset.dim, config.dataset.tasks,
                                     config.dataset.drift, config.dataset.seed,
                                     config.dataset.spread);
        fx.train.d = fx.val.d = fx.test.d = tasks.front().d;
        fx.train.k = fx.val.k = fx.test.k = tasks.front().k;
        fx.train.name = "drift-train";
        fx.val.name = "drift-val";
        fx.test.name = "drift-test";
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            Split s = split(tasks[t], config.split,
                            derive_seed(config.dataset.seed, t + 1, "split"));
            std::vector<std::size_t> idx;
            idx.reserve(s.train.size());
            for (auto& e : s.train.examples) {
                idx.push_back(fx.train.examples.size());
                fx.train.examples.push_back(std::move(e));
            }
            fx.scripted_tasks.push_back(std::move(idx));
            fx.budget_counts.push_back(fx.scripted_tasks.back().size());
            for (auto& e : s.val.examples) fx.val.examples.push_back(std::move(e));
            for (auto& e : s.test.examples) fx.test.examples.push_back(std::move(e));
        }
        break;
    }
    }
    if (config.normalize_features) {
        auto [train_n, stats] = normalize(fx.train);
        fx.train = std::move(train_n);
        fx.val = apply_normalization(fx.val, stats);
        fx.test = apply_normalization(fx.test, stats);
    }
    fx.train.validate();
    fx.val.validate();
    fx.test.validate();
    return fx;
}

RunOutcome run_method_full(const RunConfig& config, const MethodSpec& spec,
                           std::uint64_t seed) {
    Fixture fx = build_fixture(config);
    Dataset& train = fx.train; // mutated only by record_task_logits

    std::vector<std::size_t> dims;
    dims.push_back(train.d);
    for (std::size_t h : config.hidden_dims) dims.push_back(h);
    dims.push_back(train.k);

    const std::size_t T = fx.budget_counts.size();
    const bool scripted = !fx.scripted_tasks.empty();
    const bool distill = spec.method == Method::cal &&
                         (spec.strategy == Strategy::der || spec.strategy == Strategy::sd ||
                          spec.strategy == Strategy::sds2);

    // Baselines and naive fine-tuning run the same inner loop with an empty
    // history, so round 1 is bit-identical across methods for a fixed seed.
    StrategyConfig train_cfg = config.strategy;
    train_cfg.strategy = spec.method == Method::cal ? spec.strategy : Strategy::er;

    PoolState pool = PoolState::fresh(train.size());
    ModelParams model = init_model(dims, derive_seed(seed, 1, "init"));

    RunReport report;
    report.method = method_name(spec);
    report.seed = seed;
    report.config = config;

    std::size_t steps_cum = 0;
    for (std::size_t t = 1; t <= T; ++t) {
        std::vector<std::size_t> picked;
        if (scripted) {
            picked = fx.scripted_tasks[t - 1];
        } else if (t == 1) {
            picked = select_random(pool.unlabeled, fx.budget_counts[0],
                                   derive_seed(seed, 1, "seed-set"));
        } else {
            picked = select_acquisition(config.acquisition, model, train, pool.unlabeled,
                                        fx.budget_counts[t - 1],
                                        derive_seed(seed, t, "select"));
        }
        pool.label(picked);
        if (!pool.partition_valid(train.size()))
            throw ContractError("pool partition invariant broken at round " +
                                std::to_string(t));

        const std::vector<std::size_t>& current = pool.tasks[t - 1];
        std::vector<std::size_t> target;
        std::vector<std::size_t> history;
        switch (spec.method) {
        case Method::al_cold:
            model = init_model(dims, derive_seed(seed, t, "init"));
            [[fallthrough]];
        case Method::al_warm:
            target = pool.history_flat(t); // all labeled data
            break;
        case Method::naive_ft:
            target = current;
            break;
        case Method::cal:
            target = current;
            history = pool.history_flat(t - 1);
            break;
        }

        auto t0 = std::chrono::steady_clock::now();
        TrainResult tr = continual_train(std::move(model), train, target, history,
                                         train_cfg, config.convergence,
                                         derive_seed(seed, t, "train"));
        model = std::move(tr.model);
        if (distill)
            record_task_logits(model, train, current);
        auto t1 = std::chrono::steady_clock::now();

        steps_cum += tr.steps;
        RoundRecord rec;
        rec.round = t;
        rec.labeled_size = pool.labeled_count();
        rec.selected = picked;
        rec.grad_steps_cum = steps_cum;
        rec.train_epochs = tr.epochs;
        rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rec.test_accuracy = eval_accuracy(model, fx.test);
        rec.val_accuracy = eval_accuracy(model, fx.val);
        for (std::size_t i = 0; i < t; ++i)
            rec.task_accuracies.push_back(eval_accuracy_subset(model, train, pool.tasks[i]));
        rec.val_entropies = eval_entropies(model, fx.val);
        report.rounds.push_back(std::move(rec));
    }
    return {std::move(report), std::move(model)};
}

RunReport run_method(const RunConfig& config, const MethodSpec& spec, std::uint64_t seed) {
    return run_method_full(config, spec, seed).report;
}

RunReport run_al_cold(const RunConfig& config, std::uint64_t seed) {
    return run_method(config, {Method::al_cold, Strategy::er}, seed);
}

RunReport run_al_warm(const RunConfig& config, std::uint64_t seed) {
    return run_method(config, {Method::al_warm, Strategy::er}, seed);
}

RunReport run_naive_finetune(const RunConfig& config, std::uint64_t seed) {
    return run_method(config, {Method::naive_ft, Strategy::er}, seed);
}

RunReport run_cal(const RunConfig& config, Strategy strategy, std::uint64_t seed) {
    return run_method(config, {Method::cal, strategy}, seed);
}

} // namespace cal
