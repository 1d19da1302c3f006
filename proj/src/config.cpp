#include "cal/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cal/errors.hpp"

namespace cal {

namespace {

using nlohmann::json;

// Object wrapper that tracks its JSON path, type-checks every access, and
// rejects keys nobody consumed.
class Node {
public:
    Node(const json& js, std::string path) : js_(js), path_(std::move(path)) {
        if (!js_.is_object())
            throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return js_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return js_.at(key);
    }

    std::string child_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    double number(const std::string& key, double def) {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_number())
            throw ConfigError(child_path(key) + ": expected a number");
        return v.get<double>();
    }

    std::size_t count(const std::string& key, std::size_t def) {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_number_unsigned())
            throw ConfigError(child_path(key) + ": expected a nonnegative integer");
        return v.get<std::size_t>();
    }

    bool boolean(const std::string& key, bool def) {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_boolean())
            throw ConfigError(child_path(key) + ": expected a boolean");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& def) {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_string())
            throw ConfigError(child_path(key) + ": expected a string");
        return v.get<std::string>();
    }

    // Throws on keys that were present but never consumed.
    void finish() const {
        for (auto it = js_.begin(); it != js_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(child_path(it.key()) + ": unknown key");
    }

    const std::string& path() const { return path_; }

private:
    const json& js_;
    std::string path_;
    std::set<std::string> seen_;
};

DatasetSpec parse_dataset(const json& js, const std::string& path) {
    Node n(js, path);
    DatasetSpec ds;
    std::string gen = n.text("generator", n.has("csv") ? "csv" : "blobs");
    if (gen == "blobs") ds.kind = DatasetSpec::Kind::blobs;
    else if (gen == "drift") ds.kind = DatasetSpec::Kind::drift;
    else if (gen == "csv") ds.kind = DatasetSpec::Kind::csv;
    else throw ConfigError(n.child_path("generator") + ": unknown generator '" + gen + "'");

    ds.seed = n.count("seed", ds.seed);
    ds.classes = n.count("classes", ds.classes);
    ds.per_class = n.count("per_class", ds.per_class);
    ds.dim = n.count("dim", ds.dim);
    ds.spread = n.number("spread", ds.spread);
    ds.tasks = n.count("tasks", ds.tasks);
    ds.per_task = n.count("per_task", ds.per_task);
    ds.drift = n.number("drift", ds.drift);
    ds.csv_path = n.text("csv", ds.csv_path);
    if (ds.kind == DatasetSpec::Kind::csv && ds.csv_path.empty())
        throw ConfigError(n.child_path("csv") + ": required for the csv generator");
    if (ds.kind != DatasetSpec::Kind::csv) {
        if (ds.classes < 2) throw ConfigError(n.child_path("classes") + ": need >= 2");
        if (ds.dim < 2) throw ConfigError(n.child_path("dim") + ": need >= 2");
        if (ds.spread <= 0.0)
            throw ConfigError(n.child_path("spread") + ": must be positive");
    }
    if (ds.kind == DatasetSpec::Kind::drift && ds.tasks < 2)
        throw ConfigError(n.child_path("tasks") + ": need >= 2 tasks");
    n.finish();
    return ds;
}

SplitFractions parse_split(const json& js, const std::string& path) {
    Node n(js, path);
    SplitFractions f;
    f.train = n.number("train", f.train);
    f.val = n.number("val", f.val);
    f.test = n.number("test", f.test);
    double sum = f.train + f.val + f.test;
    if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(sum - 1.0) > 1e-9)
        throw ConfigError(path + ": fractions must be nonnegative and sum to 1, got " +
                          std::to_string(sum));
    n.finish();
    return f;
}

BudgetSpec parse_budget(const json& js, const std::string& path) {
    Node n(js, path);
    BudgetSpec b;
    if (n.has("counts")) {
        const json& v = n.raw("counts");
        if (!v.is_array() || v.empty())
            throw ConfigError(n.child_path("counts") + ": expected a nonempty array");
        for (const auto& x : v) {
            if (!x.is_number_unsigned() || x.get<std::size_t>() == 0)
                throw ConfigError(n.child_path("counts") + ": entries must be positive integers");
            b.counts.push_back(x.get<std::size_t>());
        }
        if (n.has("seed_fraction") || n.has("increment_fraction") || n.has("rounds"))
            throw ConfigError(path + ": specify either counts or fractions, not both");
    } else {
        b.seed_fraction = n.number("seed_fraction", b.seed_fraction);
        b.increment_fraction = n.number("increment_fraction", b.increment_fraction);
        b.rounds = n.count("rounds", b.rounds);
        if (b.seed_fraction <= 0.0 || b.seed_fraction > 1.0)
            throw ConfigError(n.child_path("seed_fraction") + ": must be in (0,1]");
        if (b.rounds > 1 && (b.increment_fraction <= 0.0 || b.increment_fraction > 1.0))
            throw ConfigError(n.child_path("increment_fraction") + ": must be in (0,1]");
        if (b.rounds == 0)
            throw ConfigError(n.child_path("rounds") + ": need >= 1");
    }
    n.finish();
    return b;
}

AcquisitionChoice parse_acquisition(const json& js, const std::string& path) {
    Node n(js, path);
    AcquisitionChoice a;
    std::string policy = n.text("policy", "entropy");
    if (policy == "random") a.policy = AcquisitionPolicy::random;
    else if (policy == "entropy") a.policy = AcquisitionPolicy::entropy;
    else if (policy == "margin") a.policy = AcquisitionPolicy::margin;
    else if (policy == "fass") a.policy = AcquisitionPolicy::fass;
    else throw ConfigError(n.child_path("policy") + ": unknown policy '" + policy + "'");

    if (a.policy == AcquisitionPolicy::fass) {
        if (!n.has("fass_c"))
            throw ConfigError(n.child_path("fass_c") + ": required for the fass policy");
        a.fass_c = n.number("fass_c", a.fass_c);
        a.fass_sigma = n.number("fass_sigma", a.fass_sigma);
        if (a.fass_c <= 1.0)
            throw ConfigError(n.child_path("fass_c") + ": must be > 1");
        if (a.fass_sigma <= 0.0)
            throw ConfigError(n.child_path("fass_sigma") + ": must be positive");
    } else if (n.has("fass_c") || n.has("fass_sigma")) {
        throw ConfigError(path + ": fass_c/fass_sigma only apply to the fass policy");
    }
    n.finish();
    return a;
}

StrategyConfig parse_strategy(const json& js, const std::string& path) {
    Node n(js, path);
    StrategyConfig s;
    std::string name = n.text("name", "er");
    try {
        s.strategy = strategy_from_name(name);
    } catch (const ContractError&) {
        throw ConfigError(n.child_path("name") + ": unknown strategy '" + name + "'");
    }
    s.m = n.count("m", s.m);
    s.m_h = n.count("m_h", 2 * s.m); // default replay size 2m
    s.alpha = n.number("alpha", s.alpha);
    s.beta = n.number("beta", s.beta);
    if (s.strategy == Strategy::sds2 && !n.has("sigma"))
        throw ConfigError(n.child_path("sigma") + ": required for the sds2 strategy");
    s.sigma = n.number("sigma", s.sigma);
    s.lambda_com = n.number("lambda_com", s.lambda_com);
    s.c = n.count("c", std::max<std::size_t>(s.m_h * 2, s.c));
    s.lr = n.number("lr", s.lr);
    s.momentum = n.number("momentum", s.momentum);
    s.weight_decay = n.number("weight_decay", s.weight_decay);
    try {
        s.validate();
    } catch (const ContractError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    n.finish();
    return s;
}

ConvergencePolicy parse_convergence(const json& js, const std::string& path) {
    Node n(js, path);
    ConvergencePolicy p;
    p.max_epochs = n.count("max_epochs", p.max_epochs);
    p.patience = n.count("patience", p.patience);
    p.min_delta = n.number("min_delta", p.min_delta);
    if (p.max_epochs == 0)
        throw ConfigError(n.child_path("max_epochs") + ": need >= 1");
    if (p.patience >= p.max_epochs)
        throw ConfigError(n.child_path("patience") + ": must be < max_epochs");
    if (p.min_delta < 0.0)
        throw ConfigError(n.child_path("min_delta") + ": must be nonnegative");
    n.finish();
    return p;
}

RunConfig parse_root(const json& js) {
    Node n(js, "");
    RunConfig cfg;
    if (n.has("dataset")) cfg.dataset = parse_dataset(n.raw("dataset"), "dataset");
    if (n.has("split")) cfg.split = parse_split(n.raw("split"), "split");
    cfg.normalize_features = n.boolean("normalize", cfg.normalize_features);
    if (n.has("model")) {
        Node m(n.raw("model"), "model");
        if (m.has("hidden")) {
            const json& v = m.raw("hidden");
            if (!v.is_array())
                throw ConfigError("model.hidden: expected an array of layer widths");
            cfg.hidden_dims.clear();
            for (const auto& x : v) {
                if (!x.is_number_unsigned() || x.get<std::size_t>() == 0)
                    throw ConfigError("model.hidden: widths must be positive integers");
                cfg.hidden_dims.push_back(x.get<std::size_t>());
            }
        }
        m.finish();
    }
    if (n.has("budget")) cfg.budget = parse_budget(n.raw("budget"), "budget");
    if (n.has("acquisition"))
        cfg.acquisition = parse_acquisition(n.raw("acquisition"), "acquisition");
    if (n.has("strategy")) cfg.strategy = parse_strategy(n.raw("strategy"), "strategy");
    if (n.has("convergence"))
        cfg.convergence = parse_convergence(n.raw("convergence"), "convergence");
    if (n.has("seeds")) {
        const json& v = n.raw("seeds");
        if (!v.is_array() || v.empty())
            throw ConfigError("seeds: expected a nonempty array of integers");
        cfg.seeds.clear();
        for (const auto& x : v) {
            if (!x.is_number_unsigned())
                throw ConfigError("seeds: entries must be nonnegative integers");
            cfg.seeds.push_back(x.get<std::uint64_t>());
        }
    }
    cfg.out_dir = n.text("out_dir", cfg.out_dir);
    n.finish();
    return cfg;
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    json js;
    try {
        js = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return parse_root(js);
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

} // namespace cal
