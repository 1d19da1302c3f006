#include "cal/report_io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "cal/errors.hpp"

namespace cal {

std::string current_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::ordered_json config_to_json(const RunConfig& config) {
    nlohmann::ordered_json js;
    nlohmann::ordered_json ds;
    switch (config.dataset.kind) {
    case DatasetSpec::Kind::blobs: ds["generator"] = "blobs"; break;
    case DatasetSpec::Kind::drift: ds["generator"] = "drift"; break;
    case DatasetSpec::Kind::csv: ds["generator"] = "csv"; break;
    }
    ds["seed"] = config.dataset.seed;
    if (config.dataset.kind == DatasetSpec::Kind::csv) {
        ds["csv"] = config.dataset.csv_path;
    } else {
        ds["classes"] = config.dataset.classes;
        ds["dim"] = config.dataset.dim;
        ds["spread"] = config.dataset.spread;
        if (config.dataset.kind == DatasetSpec::Kind::blobs) {
            ds["per_class"] = config.dataset.per_class;
        } else {
            ds["tasks"] = config.dataset.tasks;
            ds["per_task"] = config.dataset.per_task;
            ds["drift"] = config.dataset.drift;
        }
    }
    js["dataset"] = ds;
    js["split"] = {{"train", config.split.train},
                   {"val", config.split.val},
                   {"test", config.split.test}};
    js["normalize"] = config.normalize_features;
    js["model"] = {{"hidden", config.hidden_dims}};
    nlohmann::ordered_json budget;
    if (!config.budget.counts.empty()) {
        budget["counts"] = config.budget.counts;
    } else {
        budget["seed_fraction"] = config.budget.seed_fraction;
        budget["increment_fraction"] = config.budget.increment_fraction;
        budget["rounds"] = config.budget.rounds;
    }
    js["budget"] = budget;
    nlohmann::ordered_json acq;
    acq["policy"] = acquisition_name(config.acquisition.policy);
    if (config.acquisition.policy == AcquisitionPolicy::fass) {
        acq["fass_c"] = config.acquisition.fass_c;
        acq["fass_sigma"] = config.acquisition.fass_sigma;
    }
    js["acquisition"] = acq;
    js["strategy"] = {{"name", strategy_name(config.strategy.strategy)},
                      {"m", config.strategy.m},
                      {"m_h", config.strategy.m_h},
                      {"alpha", config.strategy.alpha},
                      {"beta", config.strategy.beta},
                      {"sigma", config.strategy.sigma},
                      {"lambda_com", config.strategy.lambda_com},
                      {"c", config.strategy.c},
                      {"lr", config.strategy.lr},
                      {"momentum", config.strategy.momentum},
                      {"weight_decay", config.strategy.weight_decay}};
    js["convergence"] = {{"max_epochs", config.convergence.max_epochs},
                         {"patience", config.convergence.patience},
                         {"min_delta", config.convergence.min_delta}};
    js["seeds"] = config.seeds;
    js["out_dir"] = config.out_dir;
    return js;
}

nlohmann::ordered_json report_to_json(const RunReport& report) {
    nlohmann::ordered_json js;
    js["schema_version"] = 1;
    js["method"] = report.method;
    js["seed"] = report.seed;
    js["timestamp"] = current_timestamp();
    js["config"] = config_to_json(report.config);
    js["rounds"] = nlohmann::ordered_json::array();
    for (const RoundRecord& r : report.rounds) {
        nlohmann::ordered_json row;
        row["round"] = r.round;
        row["labeled_size"] = r.labeled_size;
        row["selected"] = r.selected;
        row["grad_steps_cum"] = r.grad_steps_cum;
        row["train_epochs"] = r.train_epochs;
        row["wall_ms"] = r.wall_ms;
        row["test_accuracy"] = r.test_accuracy;
        row["val_accuracy"] = r.val_accuracy;
        row["task_accuracies"] = r.task_accuracies;
        row["val_entropies"] = r.val_entropies;
        js["rounds"].push_back(std::move(row));
    }
    return js;
}

RunReport report_from_json(const nlohmann::json& js) {
    RunReport report;
    try {
        report.method = js.at("method").get<std::string>();
        report.seed = js.at("seed").get<std::uint64_t>();
        report.config = parse_config_text(js.at("config").dump(), "report config echo");
        for (const auto& row : js.at("rounds")) {
            RoundRecord r;
            r.round = row.at("round").get<std::size_t>();
            r.labeled_size = row.at("labeled_size").get<std::size_t>();
            r.selected = row.at("selected").get<std::vector<std::size_t>>();
            r.grad_steps_cum = row.at("grad_steps_cum").get<std::size_t>();
            r.train_epochs = row.at("train_epochs").get<std::size_t>();
            r.wall_ms = row.at("wall_ms").get<double>();
            r.test_accuracy = row.at("test_accuracy").get<double>();
            r.val_accuracy = row.at("val_accuracy").get<double>();
            r.task_accuracies = row.at("task_accuracies").get<std::vector<double>>();
            r.val_entropies = row.at("val_entropies").get<std::vector<double>>();
            report.rounds.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("report: ") + e.what());
    }
    return report;
}

void save_report(const RunReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParseError("cannot open " + path + " for writing");
    out << report_to_json(report).dump(2) << "\n";
    if (!out)
        throw ParseError("write failed for " + path);
}

RunReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path);
    nlohmann::json js;
    try {
        in >> js;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return report_from_json(js);
}

} // namespace cal
