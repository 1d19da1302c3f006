#include "cal/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "cal/errors.hpp"
#include "cal/report_io.hpp"
#include "cal/rng.hpp"

namespace cal {

double relative_accuracy(double acc, double baseline_acc) {
    if (baseline_acc <= 0.0)
        throw ContractError("relative_accuracy: baseline accuracy must be positive");
    return acc / baseline_acc;
}

std::vector<double> compute_speedup(const RunReport& baseline, const RunReport& method,
                                    SpeedupBasis basis) {
    if (baseline.rounds.size() != method.rounds.size())
        throw ContractError("compute_speedup: round count mismatch");
    std::vector<double> out;
    double base_wall = 0.0, meth_wall = 0.0;
    for (std::size_t t = 0; t < baseline.rounds.size(); ++t) {
        if (baseline.rounds[t].labeled_size != method.rounds[t].labeled_size)
            throw ContractError("compute_speedup: budget schedules differ at round " +
                                std::to_string(t + 1));
        double b, m;
        if (basis == SpeedupBasis::wallclock) {
            base_wall += baseline.rounds[t].wall_ms;
            meth_wall += method.rounds[t].wall_ms;
            b = base_wall;
            m = meth_wall;
        } else {
            b = static_cast<double>(baseline.rounds[t].grad_steps_cum);
            m = static_cast<double>(method.rounds[t].grad_steps_cum);
        }
        if (m <= 0.0)
            throw ContractError("compute_speedup: nonpositive method cost");
        out.push_back(b / m);
    }
    return out;
}

std::string render_speedup(double speedup) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fx", speedup);
    return buf;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ContractError("pearson: need equal lengths >= 2");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0)
        throw NumericError("pearson: zero variance input, correlation undefined");
    return sab / std::sqrt(saa * sbb);
}

Matrix forgetting_matrix(const RunReport& report) {
    const std::size_t T = report.rounds.size();
    Matrix m(T, T, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t t = 0; t < T; ++t) {
        const auto& accs = report.rounds[t].task_accuracies;
        for (std::size_t i = 0; i < accs.size() && i <= t; ++i) m(i, t) = accs[i];
    }
    return m;
}

RobustnessReport robustness_suite(const ModelParams& model, const Dataset& clean_test,
                                  std::uint64_t seed) {
    const CorruptionKind kinds[4] = {
        CorruptionKind::gaussian_noise, CorruptionKind::feature_dropout,
        CorruptionKind::scale_shift, CorruptionKind::quantize};

    RobustnessReport rep;
    rep.clean_accuracy = eval_accuracy(model, clean_test);
    rep.accuracies = Matrix(5, 5, 0.0);
    for (int ki = 0; ki < 4; ++ki) {
        rep.kind_names.push_back(corruption_name(kinds[ki]));
        for (int s = 1; s <= 5; ++s) {
            Dataset corrupted = corrupt(clean_test, kinds[ki], s,
                                        derive_seed(seed, static_cast<std::uint64_t>(s),
                                                    corruption_name(kinds[ki])));
            rep.accuracies(ki, s - 1) = eval_accuracy(model, corrupted);
        }
    }
    rep.kind_names.push_back("mean");
    for (int s = 0; s < 5; ++s) {
        double sum = 0.0;
        for (int ki = 0; ki < 4; ++ki) sum += rep.accuracies(ki, s);
        rep.accuracies(4, s) = sum / 4.0;
    }
    return rep;
}

namespace {

bool is_cal_method(const std::string& name) { return name.rfind("cal-", 0) == 0; }

struct RunSlot {
    RunReport report;
    RobustnessReport robustness;
};

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

BenchSummary summarize_reports(const std::vector<RunReport>& reports,
                               const std::string& baseline) {
    if (reports.empty())
        throw ContractError("summarize_reports: no reports");

    // Group by method in first-appearance order; every method must cover the
    // same seeds in the same order.
    std::vector<std::string> methods;
    std::vector<std::vector<const RunReport*>> grouped;
    for (const RunReport& r : reports) {
        std::size_t mi = methods.size();
        for (std::size_t i = 0; i < methods.size(); ++i)
            if (methods[i] == r.method) mi = i;
        if (mi == methods.size()) {
            methods.push_back(r.method);
            grouped.emplace_back();
        }
        grouped[mi].push_back(&r);
    }
    std::vector<std::uint64_t> seeds;
    for (const RunReport* r : grouped[0]) seeds.push_back(r->seed);
    std::size_t baseline_pos = methods.size();
    for (std::size_t i = 0; i < methods.size(); ++i) {
        if (methods[i] == baseline) baseline_pos = i;
        if (grouped[i].size() != seeds.size())
            throw ContractError("summarize_reports: method " + methods[i] +
                                " does not cover every seed");
        for (std::size_t si = 0; si < seeds.size(); ++si)
            if (grouped[i][si]->seed != seeds[si])
                throw ContractError("summarize_reports: seed order differs for " +
                                    methods[i]);
    }
    if (baseline_pos == methods.size())
        throw ContractError("summarize_reports: baseline method '" + baseline +
                            "' missing");

    BenchSummary summary;
    summary.baseline = baseline;
    summary.seeds = seeds;
    const std::size_t T = grouped[0][0]->rounds.size();
    for (std::size_t t = 0; t < T; ++t)
        summary.budgets.push_back(grouped[0][0]->rounds[t].labeled_size);

    std::vector<double> baseline_mean(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> accs;
        for (const RunReport* r : grouped[baseline_pos])
            accs.push_back(r->rounds[t].test_accuracy);
        baseline_mean[t] = mean_of(accs);
    }

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const std::string& name = methods[mi];
        for (std::size_t t = 0; t < T; ++t) {
            MethodBudgetCell cell;
            cell.method = name;
            cell.round = t + 1;
            cell.labeled_size = summary.budgets[t];
            std::vector<double> accs, sw, ss;
            for (std::size_t si = 0; si < seeds.size(); ++si) {
                const RunReport& rep = *grouped[mi][si];
                const RunReport& base = *grouped[baseline_pos][si];
                accs.push_back(rep.rounds[t].test_accuracy);
                sw.push_back(compute_speedup(base, rep, SpeedupBasis::wallclock)[t]);
                ss.push_back(compute_speedup(base, rep, SpeedupBasis::gradsteps)[t]);
            }
            cell.acc_mean = mean_of(accs);
            cell.acc_std = std_of(accs, cell.acc_mean);
            cell.rel_acc = relative_accuracy(cell.acc_mean, baseline_mean[t]);
            cell.speedup_wall = mean_of(sw);
            cell.speedup_steps = mean_of(ss);
            summary.cells.push_back(std::move(cell));
        }

        if (is_cal_method(name)) {
            for (std::size_t t = 0; t < T; ++t) {
                CorrelationCell cc;
                cc.method = name;
                cc.round = t + 1;
                for (std::size_t si = 0; si < seeds.size(); ++si)
                    cc.r_per_seed.push_back(
                        pearson(grouped[mi][si]->rounds[t].val_entropies,
                                grouped[baseline_pos][si]->rounds[t].val_entropies));
                cc.r_mean = mean_of(cc.r_per_seed);
                summary.correlations.push_back(std::move(cc));
            }
        }

        MethodForgetting mf;
        mf.method = name;
        mf.mean_matrix = Matrix(T, T, 0.0);
        for (std::size_t i = 0; i < T; ++i)
            for (std::size_t t = 0; t < T; ++t) {
                if (t < i) {
                    mf.mean_matrix(i, t) = std::numeric_limits<double>::quiet_NaN();
                    continue;
                }
                double s = 0.0;
                for (std::size_t si = 0; si < seeds.size(); ++si)
                    s += forgetting_matrix(*grouped[mi][si])(i, t);
                mf.mean_matrix(i, t) = s / static_cast<double>(seeds.size());
            }
        summary.forgetting.push_back(std::move(mf));
    }
    return summary;
}

BenchSummary bench_run(const RunConfig& config, const std::vector<MethodSpec>& methods,
                       const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
    if (methods.empty() || seeds.empty())
        throw ContractError("bench_run: need at least one method and one seed");
    bool has_baseline = false;
    for (const MethodSpec& m : methods)
        if (method_name(m) == "al") has_baseline = true;
    if (!has_baseline)
        throw ContractError("bench_run: baseline method 'al' must be included");

    const Fixture fixture = build_fixture(config);

    const std::size_t n_jobs = methods.size() * seeds.size();
    std::vector<RunSlot> slots(n_jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t j = next.fetch_add(1);
            if (j >= n_jobs) break;
            const MethodSpec& spec = methods[j / seeds.size()];
            std::uint64_t seed = seeds[j % seeds.size()];
            RunOutcome out = run_method_full(config, spec, seed);
            slots[j].robustness = robustness_suite(out.final_model, fixture.test,
                                                   derive_seed(seed, 0, "robustness"));
            slots[j].report = std::move(out.report);
        }
    };
    std::size_t workers = std::min(jobs == 0 ? std::size_t{1} : jobs, n_jobs);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<RunReport> reports;
    reports.reserve(n_jobs);
    for (const RunSlot& s : slots) reports.push_back(s.report);
    BenchSummary summary = summarize_reports(reports, "al");
    summary.fixture = fixture.train.name;

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        MethodRobustness mr;
        mr.method = method_name(methods[mi]);
        mr.mean = slots[mi * seeds.size()].robustness;
        for (std::size_t si = 1; si < seeds.size(); ++si) {
            const RobustnessReport& r = slots[mi * seeds.size() + si].robustness;
            mr.mean.clean_accuracy += r.clean_accuracy;
            for (std::size_t i = 0; i < mr.mean.accuracies.data.size(); ++i)
                mr.mean.accuracies.data[i] += r.accuracies.data[i];
        }
        double inv = 1.0 / static_cast<double>(seeds.size());
        mr.mean.clean_accuracy *= inv;
        for (double& x : mr.mean.accuracies.data) x *= inv;
        summary.robustness.push_back(std::move(mr));
    }
    return summary;
}

void apply_config_value(RunConfig& config, const std::string& key, double value) {
    auto as_size = [&]() { return static_cast<std::size_t>(std::llround(value)); };
    if (key == "strategy.alpha") config.strategy.alpha = value;
    else if (key == "strategy.beta") config.strategy.beta = value;
    else if (key == "strategy.sigma") config.strategy.sigma = value;
    else if (key == "strategy.lambda_com") config.strategy.lambda_com = value;
    else if (key == "strategy.m") config.strategy.m = as_size();
    else if (key == "strategy.m_h") config.strategy.m_h = as_size();
    else if (key == "strategy.c") config.strategy.c = as_size();
    else if (key == "strategy.lr") config.strategy.lr = value;
    else if (key == "strategy.momentum") config.strategy.momentum = value;
    else if (key == "strategy.weight_decay") config.strategy.weight_decay = value;
    else if (key == "acquisition.fass_c") config.acquisition.fass_c = value;
    else if (key == "acquisition.fass_sigma") config.acquisition.fass_sigma = value;
    else if (key == "convergence.max_epochs") config.convergence.max_epochs = as_size();
    else if (key == "convergence.patience") config.convergence.patience = as_size();
    else if (key == "convergence.min_delta") config.convergence.min_delta = value;
    else if (key == "budget.rounds") config.budget.rounds = as_size();
    else if (key == "budget.seed_fraction") config.budget.seed_fraction = value;
    else if (key == "budget.increment_fraction") config.budget.increment_fraction = value;
    else throw ConfigError("sweep: unknown config key '" + key + "'");
}

std::vector<SweepPoint> sweep(const RunConfig& base,
                              const std::vector<std::pair<std::string, std::vector<double>>>& grid,
                              const std::vector<MethodSpec>& methods,
                              const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
    if (grid.empty())
        throw ContractError("sweep: empty grid");
    for (const auto& [key, values] : grid)
        if (values.empty())
            throw ConfigError("sweep: empty value list for key '" + key + "'");

    std::vector<SweepPoint> points;
    std::vector<std::size_t> cursor(grid.size(), 0);
    while (true) {
        RunConfig cfg = base;
        std::string assignment;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            apply_config_value(cfg, grid[g].first, grid[g].second[cursor[g]]);
            if (!assignment.empty()) assignment += ",";
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s=%.17g", grid[g].first.c_str(),
                          grid[g].second[cursor[g]]);
            assignment += buf;
        }
        SweepPoint pt;
        pt.assignment = assignment;
        pt.summary = bench_run(cfg, methods, seeds, jobs);
        points.push_back(std::move(pt));

        std::size_t g = grid.size();
        while (g-- > 0) {
            if (++cursor[g] < grid[g].second.size()) break;
            cursor[g] = 0;
            if (g == 0) return points;
        }
    }
}

namespace {

void require_finite(double v, const std::string& what) {
    if (!std::isfinite(v))
        throw NumericError("emit_report: non-finite value in " + what);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void emit_report(const std::vector<SweepPoint>& summaries, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    nlohmann::ordered_json root;
    root["schema_version"] = 1;
    root["generated_at"] = current_timestamp();
    root["summaries"] = nlohmann::ordered_json::array();

    std::ofstream acc(fs::path(out_dir) / "accuracy.csv", std::ios::binary);
    std::ofstream spd(fs::path(out_dir) / "speedup.csv", std::ios::binary);
    std::ofstream corr(fs::path(out_dir) / "correlation.csv", std::ios::binary);
    std::ofstream forg(fs::path(out_dir) / "forgetting.csv", std::ios::binary);
    acc << "assignment,method,round,labeled_size,acc_mean,acc_std,rel_acc\n";
    spd << "assignment,method,round,labeled_size,speedup_wall,speedup_steps\n";
    corr << "assignment,method,round,pearson_r\n";
    forg << "assignment,method,task,round,accuracy\n";

    for (const SweepPoint& pt : summaries) {
        nlohmann::ordered_json js;
        js["assignment"] = pt.assignment;
        js["fixture"] = pt.summary.fixture;
        js["baseline"] = pt.summary.baseline;
        js["seeds"] = pt.summary.seeds;
        js["budgets"] = pt.summary.budgets;
        js["cells"] = nlohmann::ordered_json::array();
        for (const auto& c : pt.summary.cells) {
            require_finite(c.acc_mean, "accuracy mean");
            require_finite(c.acc_std, "accuracy std");
            require_finite(c.rel_acc, "relative accuracy");
            require_finite(c.speedup_wall, "wall-clock speedup");
            require_finite(c.speedup_steps, "gradient-step speedup");
            js["cells"].push_back({{"method", c.method},
                                   {"round", c.round},
                                   {"labeled_size", c.labeled_size},
                                   {"acc_mean", c.acc_mean},
                                   {"acc_std", c.acc_std},
                                   {"rel_acc", c.rel_acc},
                                   {"speedup_wall", c.speedup_wall},
                                   {"speedup_steps", c.speedup_steps},
                                   {"speedup_rendered", render_speedup(c.speedup_steps)}});
            acc << pt.assignment << "," << c.method << "," << c.round << ","
                << c.labeled_size << "," << fmt17(c.acc_mean) << "," << fmt17(c.acc_std)
                << "," << fmt17(c.rel_acc) << "\n";
            spd << pt.assignment << "," << c.method << "," << c.round << ","
                << c.labeled_size << "," << fmt17(c.speedup_wall) << ","
                << fmt17(c.speedup_steps) << "\n";
        }
        js["correlations"] = nlohmann::ordered_json::array();
        for (const auto& c : pt.summary.correlations) {
            require_finite(c.r_mean, "correlation");
            for (double r : c.r_per_seed) require_finite(r, "correlation");
            js["correlations"].push_back({{"method", c.method},
                                          {"round", c.round},
                                          {"r_mean", c.r_mean},
                                          {"r_per_seed", c.r_per_seed}});
            corr << pt.assignment << "," << c.method << "," << c.round << ","
                 << fmt17(c.r_mean) << "\n";
        }
        js["forgetting"] = nlohmann::ordered_json::array();
        for (const auto& mf : pt.summary.forgetting) {
            nlohmann::ordered_json entry;
            entry["method"] = mf.method;
            entry["matrix"] = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < mf.mean_matrix.rows; ++i) {
                nlohmann::ordered_json row = nlohmann::ordered_json::array();
                for (std::size_t t = 0; t < mf.mean_matrix.cols; ++t) {
                    double v = mf.mean_matrix(i, t);
                    if (std::isnan(v)) {
                        row.push_back(nullptr); // undefined upper triangle
                    } else {
                        row.push_back(v);
                        forg << pt.assignment << "," << mf.method << "," << (i + 1) << ","
                             << (t + 1) << "," << fmt17(v) << "\n";
                    }
                }
                entry["matrix"].push_back(row);
            }
            js["forgetting"].push_back(entry);
        }
        js["robustness"] = nlohmann::ordered_json::array();
        for (const auto& mr : pt.summary.robustness) {
            require_finite(mr.mean.clean_accuracy, "robustness");
            nlohmann::ordered_json entry;
            entry["method"] = mr.method;
            entry["clean_accuracy"] = mr.mean.clean_accuracy;
            entry["rows"] = nlohmann::ordered_json::array();
            for (std::size_t ki = 0; ki < mr.mean.kind_names.size(); ++ki) {
                nlohmann::ordered_json row;
                row["kind"] = mr.mean.kind_names[ki];
                std::vector<double> accs;
                for (std::size_t s = 0; s < 5; ++s) {
                    require_finite(mr.mean.accuracies(ki, s), "robustness");
                    accs.push_back(mr.mean.accuracies(ki, s));
                }
                row["accuracy_by_severity"] = accs;
                entry["rows"].push_back(row);
            }
            js["robustness"].push_back(entry);
        }
        root["summaries"].push_back(std::move(js));
    }

    std::ofstream js_out(fs::path(out_dir) / "summary.json", std::ios::binary);
    js_out << root.dump(2) << "\n";
    if (!js_out || !acc || !spd || !corr || !forg)
        throw ParseError("emit_report: write failed in " + out_dir);
}

} // namespace cal
