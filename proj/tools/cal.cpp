// cal — continual active learning experiment runner.
//
// Subcommands: run, bench, sweep, gen-data, gradcheck, analyze.
// CAL_DETERMINISTIC=1 forces single-worker execution for bench/sweep.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cal/bench.hpp"
#include "cal/checkpoint.hpp"
#include "cal/csv.hpp"
#include "cal/errors.hpp"
#include "cal/orchestrator.hpp"
#include "cal/report_io.hpp"
#include "cal/rng.hpp"

namespace {

namespace fs = std::filesystem;

std::vector<cal::MethodSpec> parse_methods(const std::string& csv) {
    std::vector<cal::MethodSpec> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        std::string name = csv.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!name.empty()) out.push_back(cal::method_from_name(name));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty())
        throw cal::ConfigError("--methods: no method names given");
    return out;
}

std::vector<std::uint64_t> resolve_seeds(const cal::RunConfig& config, int n_seeds) {
    if (n_seeds <= 0) return config.seeds;
    std::vector<std::uint64_t> seeds;
    for (int i = 1; i <= n_seeds; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
    return seeds;
}

std::size_t resolve_jobs(std::size_t jobs) {
    const char* det = std::getenv("CAL_DETERMINISTIC");
    if (det && std::string(det) == "1") return 1;
    return jobs;
}

// "strategy.alpha=0.1,0.25;strategy.m=16,32" -> grid
std::vector<std::pair<std::string, std::vector<double>>> parse_grid(const std::string& text) {
    std::vector<std::pair<std::string, std::vector<double>>> grid;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t semi = text.find(';', start);
        std::string item = text.substr(
            start, semi == std::string::npos ? std::string::npos : semi - start);
        std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw cal::ConfigError("--grid: expected key=v1,v2,... in '" + item + "'");
        std::string key = item.substr(0, eq);
        std::vector<double> values;
        std::size_t vstart = eq + 1;
        while (vstart <= item.size()) {
            std::size_t comma = item.find(',', vstart);
            std::string tok = item.substr(
                vstart, comma == std::string::npos ? std::string::npos : comma - vstart);
            try {
                values.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw cal::ConfigError("--grid: bad value '" + tok + "' for " + key);
            }
            if (comma == std::string::npos) break;
            vstart = comma + 1;
        }
        grid.emplace_back(key, values);
        if (semi == std::string::npos) break;
        start = semi + 1;
    }
    if (grid.empty())
        throw cal::ConfigError("--grid: empty grid");
    return grid;
}

int cmd_run(const std::string& config_path, const std::string& method,
            std::uint64_t seed, const std::string& out_dir) {
    cal::RunConfig config = cal::parse_config(config_path);
    cal::MethodSpec spec = cal::method_from_name(method);
    cal::RunOutcome outcome = cal::run_method_full(config, spec, seed);
    const cal::RunReport& report = outcome.report;
    fs::create_directories(out_dir);
    std::string stem = report.method + "-seed" + std::to_string(seed);
    std::string file = (fs::path(out_dir) / (stem + ".json")).string();
    cal::save_report(report, file);
    cal::save_model(outcome.final_model,
                    (fs::path(out_dir) / (stem + ".model.bin")).string());
    const auto& last = report.rounds.back();
    std::printf("%s seed=%llu: %zu rounds, final test acc %.4f, %zu grad steps -> %s\n",
                report.method.c_str(), static_cast<unsigned long long>(seed),
                report.rounds.size(), last.test_accuracy, last.grad_steps_cum,
                file.c_str());
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& methods_csv,
              int n_seeds, std::size_t jobs, const std::string& out_override) {
    cal::RunConfig config = cal::parse_config(config_path);
    auto methods = parse_methods(methods_csv);
    auto seeds = resolve_seeds(config, n_seeds);
    std::string out_dir = out_override.empty() ? config.out_dir : out_override;

    cal::BenchSummary summary = cal::bench_run(config, methods, seeds, resolve_jobs(jobs));
    cal::emit_report({{"", summary}}, out_dir);
    for (const auto& cell : summary.cells)
        if (cell.round == summary.budgets.size())
            std::printf("%-10s final acc %.4f (rel %.4f)  speedup %s (steps) %s (wall)\n",
                        cell.method.c_str(), cell.acc_mean, cell.rel_acc,
                        cal::render_speedup(cell.speedup_steps).c_str(),
                        cal::render_speedup(cell.speedup_wall).c_str());
    std::printf("summary written to %s\n", out_dir.c_str());
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_text,
              const std::string& methods_csv, int n_seeds, std::size_t jobs,
              const std::string& out_override) {
    cal::RunConfig config = cal::parse_config(config_path);
    auto grid = parse_grid(grid_text);
    auto methods = parse_methods(methods_csv);
    auto seeds = resolve_seeds(config, n_seeds);
    std::string out_dir = out_override.empty() ? config.out_dir : out_override;

    auto points = cal::sweep(config, grid, methods, seeds, resolve_jobs(jobs));
    cal::emit_report(points, out_dir);
    for (const auto& pt : points)
        for (const auto& cell : pt.summary.cells)
            if (cell.round == pt.summary.budgets.size())
                std::printf("[%s] %-10s final acc %.4f\n", pt.assignment.c_str(),
                            cell.method.c_str(), cell.acc_mean);
    std::printf("%zu sweep points written to %s\n", points.size(), out_dir.c_str());
    return 0;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_file) {
    cal::RunConfig config = cal::parse_config(config_path);
    if (config.dataset.kind == cal::DatasetSpec::Kind::csv)
        throw cal::ConfigError("gen-data: config already points at a csv dataset");
    if (config.dataset.kind == cal::DatasetSpec::Kind::blobs) {
        cal::Dataset ds = cal::gen_blobs(config.dataset.classes, config.dataset.per_class,
                                         config.dataset.dim, config.dataset.spread,
                                         config.dataset.seed);
        cal::save_csv(ds, out_file);
        std::printf("wrote %zu examples (k=%zu, d=%zu) to %s\n", ds.size(), ds.k, ds.d,
                    out_file.c_str());
    } else {
        auto tasks = cal::gen_drift_tasks(config.dataset.classes, config.dataset.per_task,
                                          config.dataset.dim, config.dataset.tasks,
                                          config.dataset.drift, config.dataset.seed,
                                          config.dataset.spread);
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            std::string file = out_file;
            std::size_t dot = file.rfind('.');
            std::string suffix = "-task" + std::to_string(t + 1);
            if (dot == std::string::npos) file += suffix;
            else file.insert(dot, suffix);
            cal::save_csv(tasks[t], file);
            std::printf("wrote task %zu (%zu examples) to %s\n", t + 1, tasks[t].size(),
                        file.c_str());
        }
    }
    return 0;
}

int cmd_gradcheck() {
    const std::vector<std::size_t> dims = {2, 16, 16, 4};
    const std::size_t batch = 8;
    cal::ModelParams model = cal::init_model(dims, 42);
    cal::Rng rng(cal::derive_seed(42, 0, "gradcheck"));

    cal::Matrix X(batch, dims.front());
    for (double& x : X.data) x = rng.normal();
    cal::BatchTargets targets;
    const std::size_t n_replay = batch / 2;
    targets.current_count = batch - n_replay;
    for (std::size_t i = 0; i < batch; ++i)
        targets.labels.push_back(static_cast<int>(rng.uniform_below(dims.back())));
    targets.replay_logits = cal::Matrix(n_replay, dims.back());
    for (double& z : targets.replay_logits.data) z = rng.normal();

    struct Case {
        const char* name;
        cal::LossSpec spec;
        cal::BatchTargets targets;
    };
    cal::BatchTargets ce_targets;
    ce_targets.labels = targets.labels;
    ce_targets.current_count = batch;
    std::vector<Case> cases = {
        {"cross_entropy", {cal::LossKind::cross_entropy, 0, 0, 1}, ce_targets},
        {"der(alpha=0.1,beta=1)", {cal::LossKind::der, 0.1, 1.0, 1}, targets},
        {"sd(alpha=0.25,lambda=0.5)", {cal::LossKind::sd, 0.25, 0.0, 0.5}, targets},
    };

    bool ok = true;
    for (const Case& c : cases) {
        double err = cal::grad_check(model, X, c.spec, c.targets, 1e-5);
        bool pass = err <= 1e-4;
        ok = ok && pass;
        std::printf("%-26s max relative error %.3e  [%s]\n", c.name, err,
                    pass ? "ok" : "FAIL");
    }
    return ok ? 0 : 1;
}

int cmd_analyze(const std::string& in_dir, const std::string& out_dir,
                const std::string& baseline) {
    std::vector<cal::RunReport> reports;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(in_dir))
        if (entry.path().extension() == ".json" &&
            entry.path().filename() != "summary.json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) reports.push_back(cal::load_report(f.string()));
    if (reports.empty())
        throw cal::ConfigError("analyze: no report files in " + in_dir);

    cal::BenchSummary summary = cal::summarize_reports(reports, baseline);
    summary.fixture = in_dir;
    cal::emit_report({{"", summary}}, out_dir);
    std::printf("aggregated %zu reports into %s\n", reports.size(), out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continual active learning: replay-accelerated batch AL experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, method = "al", methods_csv, grid_text;
    std::string in_dir, baseline = "al";
    std::uint64_t seed = 1;
    int n_seeds = 0;
    std::size_t jobs = 1;

    auto* run = app.add_subcommand("run", "Run one method once and write its report");
    run->add_option("--config", config_path, "JSON config path")->required();
    run->add_option("--strategy", method,
                    "al | al-ws | naive-ft | cal-er | cal-mir | cal-der | cal-sd | cal-sds2");
    run->add_option("--seed", seed, "Run seed");
    run->add_option("--out", out_dir, "Output directory")->required();

    auto* bench = app.add_subcommand("bench", "Run methods x seeds and aggregate");
    bench->add_option("--config", config_path, "JSON config path")->required();
    bench->add_option("--methods", methods_csv, "Comma-separated method names")
        ->default_val("al,al-ws,cal-er,cal-mir,cal-der,cal-sd,cal-sds2");
    bench->add_option("--seeds", n_seeds, "Use seeds 1..N (default: config seeds)");
    bench->add_option("--jobs", jobs, "Parallel workers");
    bench->add_option("--out", out_dir, "Output directory (default: config out_dir)");

    auto* sweep = app.add_subcommand("sweep", "Hyperparameter grid of bench runs");
    sweep->add_option("--config", config_path, "JSON config path")->required();
    sweep->add_option("--grid", grid_text, "key=v1,v2[;key2=...] over config paths")
        ->required();
    sweep->add_option("--methods", methods_csv, "Comma-separated method names")
        ->default_val("al,cal-sd");
    sweep->add_option("--seeds", n_seeds, "Use seeds 1..N (default: config seeds)");
    sweep->add_option("--jobs", jobs, "Parallel workers");
    sweep->add_option("--out", out_dir, "Output directory (default: config out_dir)");

    auto* gen = app.add_subcommand("gen-data", "Generate the configured dataset as CSV");
    gen->add_option("--config", config_path, "JSON config path")->required();
    gen->add_option("--out", out_dir, "Output CSV file")->required();

    app.add_subcommand("gradcheck",
                       "Verify analytic gradients against finite differences");

    auto* analyze = app.add_subcommand("analyze", "Re-aggregate existing run reports");
    analyze->add_option("--in", in_dir, "Directory of run report JSON files")->required();
    analyze->add_option("--out", out_dir, "Output directory")->required();
    analyze->add_option("--baseline", baseline, "Baseline method name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand("run")) return cmd_run(config_path, method, seed, out_dir);
        if (app.got_subcommand("bench"))
            return cmd_bench(config_path, methods_csv, n_seeds, jobs, out_dir);
        if (app.got_subcommand("sweep"))
            return cmd_sweep(config_path, grid_text, methods_csv, n_seeds, jobs, out_dir);
        if (app.got_subcommand("gen-data")) return cmd_gen_data(config_path, out_dir);
        if (app.got_subcommand("gradcheck")) return cmd_gradcheck();
        if (app.got_subcommand("analyze")) return cmd_analyze(in_dir, out_dir, baseline);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
