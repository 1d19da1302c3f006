#include "cal/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cal/errors.hpp"
#include "cal/rng.hpp"

namespace cal {

namespace {

std::vector<double> random_unit_vector(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& x : v) {
            x = rng.normal();
            norm += x * x;
        }
    } while (norm < 1e-18);
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

// Class means on the unit sphere: draw a candidate cloud, then keep k by
// farthest-point traversal so classes are well separated for every seed.
std::vector<std::vector<double>> sphere_means(Rng& rng, std::size_t k, std::size_t d) {
    const std::size_t n_cand = 64 * k;
    std::vector<std::vector<double>> cand;
    cand.reserve(n_cand);
    for (std::size_t i = 0; i < n_cand; ++i) cand.push_back(random_unit_vector(rng, d));

    std::vector<std::vector<double>> means;
    means.reserve(k);
    std::vector<double> nearest(n_cand, std::numeric_limits<double>::infinity());
    means.push_back(cand[0]);
    while (means.size() < k) {
        std::size_t far = 0;
        for (std::size_t i = 0; i < n_cand; ++i) {
            double d2 = squared_distance(cand[i].data(), means.back().data(), d);
            nearest[i] = std::min(nearest[i], d2);
            if (nearest[i] > nearest[far]) far = i;
        }
        means.push_back(cand[far]);
    }
    return means;
}

} // namespace

Dataset gen_blobs(std::size_t k, std::size_t n_per_class, std::size_t d,
                  double spread, std::uint64_t seed) {
    if (k < 2 || d < 2)
        throw ContractError("gen_blobs: need k >= 2 and d >= 2");
    if (spread <= 0.0)
        throw ContractError("gen_blobs: spread must be positive");

    Rng rng(seed);
    auto means = sphere_means(rng, k, d);

    Dataset ds;
    ds.d = d;
    ds.k = k;
    ds.name = "blobs-k" + std::to_string(k) + "-n" + std::to_string(n_per_class) +
              "-d" + std::to_string(d);
    ds.examples.reserve(k * n_per_class);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            Example e;
            e.label = static_cast<int>(c);
            e.features.resize(d);
            for (std::size_t j = 0; j < d; ++j)
                e.features[j] = means[c][j] + spread * rng.normal();
            ds.examples.push_back(std::move(e));
        }
    }
    return ds;
}

std::vector<Dataset> gen_drift_tasks(std::size_t k, std::size_t n_per_task,
                                     std::size_t d, std::size_t n_tasks,
                                     double drift, std::uint64_t seed,
                                     double spread) {
    if (k < 2 || d < 2)
        throw ContractError("gen_drift_tasks: need k >= 2 and d >= 2");
    if (n_tasks < 2)
        throw ContractError("gen_drift_tasks: need at least 2 tasks");
    if (drift < 0.0)
        throw ContractError("gen_drift_tasks: drift must be nonnegative");

    Rng rng(seed);
    auto base_means = sphere_means(rng, k, d);
    auto direction = random_unit_vector(rng, d);

    std::vector<Dataset> tasks;
    tasks.reserve(n_tasks);
    for (std::size_t t = 0; t < n_tasks; ++t) {
        double shift = drift * static_cast<double>(t);
        double angle = drift * 15.0 * static_cast<double>(t) * std::numbers::pi / 180.0;
        double ca = std::cos(angle), sa = std::sin(angle);

        std::vector<std::vector<double>> means = base_means;
        for (auto& m : means) {
            double x0 = m[0], x1 = m[1];
            m[0] = ca * x0 - sa * x1;
            m[1] = sa * x0 + ca * x1;
            for (std::size_t j = 0; j < d; ++j) m[j] += shift * direction[j];
        }

        Dataset ds;
        ds.d = d;
        ds.k = k;
        ds.name = "drift-task" + std::to_string(t + 1);
        ds.examples.reserve(n_per_task);
        for (std::size_t i = 0; i < n_per_task; ++i) {
            std::size_t c = i % k; // round-robin keeps classes balanced
            Example e;
            e.label = static_cast<int>(c);
            e.task_id = static_cast<int>(t);
            e.features.resize(d);
            for (std::size_t j = 0; j < d; ++j)
                e.features[j] = means[c][j] + spread * rng.normal();
            ds.examples.push_back(std::move(e));
        }
        tasks.push_back(std::move(ds));
    }
    return tasks;
}

Split split(const Dataset& ds, SplitFractions fractions, std::uint64_t seed) {
    const double f[3] = {fractions.train, fractions.val, fractions.test};
    double sum = f[0] + f[1] + f[2];
    for (double x : f)
        if (x < 0.0) throw ContractError("split: negative fraction");
    if (std::abs(sum - 1.0) > 1e-9)
        throw ContractError("split: fractions sum to " + std::to_string(sum));

    std::size_t positive_parts = 0;
    for (double x : f)
        if (x > 0.0) ++positive_parts;

    // Group indices by class, shuffle within class, then largest-remainder
    // allocation per class so proportions hold to within one example.
    std::vector<std::vector<std::size_t>> by_class(ds.k);
    for (std::size_t i = 0; i < ds.size(); ++i)
        by_class[static_cast<std::size_t>(ds.examples[i].label)].push_back(i);

    Rng rng(seed);
    std::vector<std::size_t> part_of(ds.size(), 0);
    for (std::size_t c = 0; c < ds.k; ++c) {
        auto& idx = by_class[c];
        if (!idx.empty() && idx.size() < positive_parts)
            throw ContractError("split: class " + std::to_string(c) +
                                " has fewer examples than split parts");
        rng.shuffle(idx);
        std::size_t n = idx.size();
        std::size_t counts[3];
        double frac_part[3];
        std::size_t assigned = 0;
        for (int p = 0; p < 3; ++p) {
            double want = f[p] * static_cast<double>(n);
            counts[p] = static_cast<std::size_t>(std::floor(want));
            frac_part[p] = want - std::floor(want);
            assigned += counts[p];
        }
        while (assigned < n) {
            int best = 0;
            for (int p = 1; p < 3; ++p)
                if (frac_part[p] > frac_part[best]) best = p;
            ++counts[best];
            frac_part[best] = -1.0;
            ++assigned;
        }
        std::size_t pos = 0;
        for (int p = 0; p < 3; ++p)
            for (std::size_t i = 0; i < counts[p]; ++i) part_of[idx[pos++]] = p;
    }

    Split out;
    Dataset* parts[3] = {&out.train, &out.val, &out.test};
    const char* suffix[3] = {"-train", "-val", "-test"};
    for (int p = 0; p < 3; ++p) {
        parts[p]->d = ds.d;
        parts[p]->k = ds.k;
        parts[p]->name = ds.name + suffix[p];
    }
    for (std::size_t i = 0; i < ds.size(); ++i)
        parts[part_of[i]]->examples.push_back(ds.examples[i]);
    return out;
}

std::pair<Dataset, NormStats> normalize(const Dataset& train) {
    if (train.empty())
        throw ContractError("normalize: empty dataset");
    NormStats stats;
    stats.mean.assign(train.d, 0.0);
    stats.std.assign(train.d, 0.0);
    const double n = static_cast<double>(train.size());
    for (const Example& e : train.examples)
        for (std::size_t j = 0; j < train.d; ++j) stats.mean[j] += e.features[j];
    for (double& m : stats.mean) m /= n;
    for (const Example& e : train.examples)
        for (std::size_t j = 0; j < train.d; ++j) {
            double dlt = e.features[j] - stats.mean[j];
            stats.std[j] += dlt * dlt;
        }
    for (double& s : stats.std) s = std::max(std::sqrt(s / n), 1e-8);
    return {apply_normalization(train, stats), stats};
}

Dataset apply_normalization(const Dataset& ds, const NormStats& stats) {
    if (stats.mean.size() != ds.d)
        throw ShapeError("apply_normalization: stats dim mismatch");
    Dataset out = ds;
    for (Example& e : out.examples)
        for (std::size_t j = 0; j < ds.d; ++j)
            e.features[j] = (e.features[j] - stats.mean[j]) / stats.std[j];
    return out;
}

const char* corruption_name(CorruptionKind kind) {
    switch (kind) {
    case CorruptionKind::gaussian_noise: return "gaussian_noise";
    case CorruptionKind::feature_dropout: return "feature_dropout";
    case CorruptionKind::scale_shift: return "scale_shift";
    case CorruptionKind::quantize: return "quantize";
    }
    return "?";
}

Dataset corrupt(const Dataset& ds, CorruptionKind kind, int severity,
                std::uint64_t seed) {
    if (severity < 1 || severity > 5)
        throw ContractError("corrupt: severity must be in 1..5");

    Rng rng(seed);
    Dataset out = ds;
    out.name = ds.name + "-" + corruption_name(kind) + "-s" + std::to_string(severity);
    const double s = static_cast<double>(severity);

    switch (kind) {
    case CorruptionKind::gaussian_noise: {
        double std_dev = 0.1 * s;
        for (Example& e : out.examples)
            for (double& x : e.features) x += std_dev * rng.normal();
        break;
    }
    case CorruptionKind::feature_dropout: {
        double rate = 0.1 * s;
        for (Example& e : out.examples)
            for (double& x : e.features)
                if (rng.next_double() < rate) x = 0.0;
        break;
    }
    case CorruptionKind::scale_shift: {
        double scale = 1.0 + 0.2 * s;
        double shift = 0.1 * s;
        for (Example& e : out.examples)
            for (double& x : e.features) x = scale * x + shift;
        break;
    }
    case CorruptionKind::quantize: {
        // Per-feature uniform quantization to 2^(7-s) levels over [min, max].
        auto levels = static_cast<double>(1u << (7 - severity));
        std::vector<double> lo(ds.d, std::numeric_limits<double>::infinity());
        std::vector<double> hi(ds.d, -std::numeric_limits<double>::infinity());
        for (const Example& e : ds.examples)
            for (std::size_t j = 0; j < ds.d; ++j) {
                lo[j] = std::min(lo[j], e.features[j]);
                hi[j] = std::max(hi[j], e.features[j]);
            }
        for (Example& e : out.examples)
            for (std::size_t j = 0; j < ds.d; ++j) {
                double range = hi[j] - lo[j];
                if (range <= 0.0) continue;
                double step = range / (levels - 1.0);
                e.features[j] = lo[j] + std::round((e.features[j] - lo[j]) / step) * step;
            }
        break;
    }
    }
    return out;
}

} // namespace cal
