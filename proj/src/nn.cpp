#include "cal/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cal/errors.hpp"
#include "cal/rng.hpp"

namespace cal {

std::size_t ModelParams::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += weights[l].data.size() + biases[l].size();
    return n;
}

bool ModelParams::finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (!weights[l].finite() || !all_finite(biases[l])) return false;
        if (!weight_momentum[l].finite() || !all_finite(bias_momentum[l])) return false;
    }
    return true;
}

bool Gradients::finite() const {
    for (std::size_t l = 0; l < weights.size(); ++l)
        if (!weights[l].finite() || !all_finite(biases[l])) return false;
    return true;
}

ModelParams init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2)
        throw ContractError("init_model: need at least input and output dims");
    for (std::size_t d : layer_dims)
        if (d == 0) throw ContractError("init_model: zero layer dimension");

    ModelParams m;
    m.layer_dims = layer_dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        std::size_t fan_in = layer_dims[l];
        std::size_t fan_out = layer_dims[l + 1];
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& x : w.data) x = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
        m.weight_momentum.emplace_back(fan_out, fan_in, 0.0);
        m.bias_momentum.emplace_back(fan_out, 0.0);
    }
    return m;
}

ForwardTrace forward(const ModelParams& model, const Matrix& X) {
    if (X.cols != model.input_dim())
        throw ShapeError("forward: X has " + std::to_string(X.cols) +
                         " columns, model expects " + std::to_string(model.input_dim()));

    ForwardTrace trace;
    trace.activations.reserve(model.layer_count());
    trace.activations.push_back(X);

    const std::size_t L = model.layer_count();
    Matrix a = X;
    for (std::size_t l = 0; l < L; ++l) {
        const Matrix& w = model.weights[l];
        const std::vector<double>& b = model.biases[l];
        Matrix z(a.rows, w.rows);
        for (std::size_t i = 0; i < a.rows; ++i) {
            const double* arow = a.row(i);
            double* zrow = z.row(i);
            for (std::size_t j = 0; j < w.rows; ++j) {
                const double* wrow = w.row(j);
                double s = b[j];
                for (std::size_t c = 0; c < w.cols; ++c) s += wrow[c] * arow[c];
                zrow[j] = s;
            }
        }
        if (l + 1 < L) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
            trace.activations.push_back(z);
            a = std::move(z);
        } else {
            trace.logits = std::move(z);
        }
    }
    trace.penultimate = trace.activations.back();
    return trace;
}

void softmax_row(const double* logits, double* out, std::size_t k) {
    double mx = logits[0];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (std::size_t i = 0; i < k; ++i) out[i] /= sum;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> out(logits.size());
    softmax_row(logits.data(), out.data(), logits.size());
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i)
        softmax_row(logits.row(i), out.row(i), logits.cols);
    return out;
}

double loss_cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
    if (probs.rows != labels.size())
        throw ShapeError("loss_cross_entropy: batch size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= probs.cols)
            throw ContractError("loss_cross_entropy: label " + std::to_string(y) +
                                " out of range at row " + std::to_string(i));
        total += -std::log(std::max(probs(i, static_cast<std::size_t>(y)), kProbEps));
    }
    return total / static_cast<double>(probs.rows);
}

double loss_kl(const std::vector<double>& teacher, const std::vector<double>& student) {
    if (teacher.size() != student.size())
        throw ShapeError("loss_kl: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < teacher.size(); ++i) {
        if (teacher[i] <= 0.0) continue; // 0 * log 0 = 0
        s += teacher[i] * (std::log(teacher[i]) - std::log(std::max(student[i], kProbEps)));
    }
    return s;
}

double loss_mse_logits(const std::vector<double>& g, const std::vector<double>& z_prime) {
    if (g.size() != z_prime.size())
        throw ShapeError("loss_mse_logits: length mismatch");
    return squared_distance(g.data(), z_prime.data(), g.size());
}

namespace {

void validate_targets(const LossSpec& spec, const Matrix& logits,
                      const BatchTargets& targets) {
    if (targets.labels.size() != logits.rows)
        throw ContractError("loss targets: label count does not match batch");
    if (targets.current_count > logits.rows)
        throw ContractError("loss targets: current_count exceeds batch");
    const std::size_t n_replay = logits.rows - targets.current_count;
    if (spec.kind != LossKind::cross_entropy) {
        if (targets.replay_logits.rows != n_replay)
            throw ContractError("loss targets: stored logits rows != replay rows");
        if (n_replay > 0 && targets.replay_logits.cols != logits.cols)
            throw ContractError("loss targets: stored logits width != class count");
    }
    for (int y : targets.labels)
        if (y < 0 || static_cast<std::size_t>(y) >= logits.cols)
            throw ContractError("loss targets: label out of range");
}

// -log max(softmax(g)[y], eps) for one row.
double row_ce(const double* probs, int y) {
    return -std::log(std::max(probs[y], kProbEps));
}

// KL(softmax(z') || softmax(g)) for one row, student clamped.
double row_kl(const double* zp, const double* probs, std::size_t k) {
    std::vector<double> teacher(k);
    softmax_row(zp, teacher.data(), k);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        s += teacher[i] * (std::log(teacher[i]) - std::log(std::max(probs[i], kProbEps)));
    return s;
}

} // namespace

double loss_value(const LossSpec& spec, const Matrix& logits, const BatchTargets& targets) {
    validate_targets(spec, logits, targets);
    const std::size_t n = logits.rows;
    const std::size_t nc = targets.current_count;
    const std::size_t nr = n - nc;
    const std::size_t k = logits.cols;
    Matrix probs = softmax_rows(logits);

    switch (spec.kind) {
    case LossKind::cross_entropy: {
        // Mean over the whole (possibly interleaved) batch.
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += row_ce(probs.row(i), targets.labels[i]);
        return s / static_cast<double>(n);
    }
    case LossKind::der: {
        double cur = 0.0;
        for (std::size_t i = 0; i < nc; ++i) cur += row_ce(probs.row(i), targets.labels[i]);
        double mse = 0.0, rep_ce = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            std::size_t i = nc + r;
            mse += squared_distance(logits.row(i), targets.replay_logits.row(r), k);
            rep_ce += row_ce(probs.row(i), targets.labels[i]);
        }
        double loss = nc > 0 ? cur / static_cast<double>(nc) : 0.0;
        if (nr > 0)
            loss += (spec.alpha * mse + spec.beta * rep_ce) / static_cast<double>(nr);
        return loss;
    }
    case LossKind::sd: {
        double cur = 0.0;
        for (std::size_t i = 0; i < nc; ++i) cur += row_ce(probs.row(i), targets.labels[i]);
        double kl = 0.0, rep_ce = 0.0;
        for (std::size_t r = 0; r < nr; ++r) {
            std::size_t i = nc + r;
            kl += row_kl(targets.replay_logits.row(r), probs.row(i), k);
            rep_ce += row_ce(probs.row(i), targets.labels[i]);
        }
        double loss = nc > 0 ? spec.lambda_t * cur / static_cast<double>(nc) : 0.0;
        if (nr > 0)
            loss += (1.0 - spec.lambda_t) *
                    (spec.alpha * kl + (1.0 - spec.alpha) * rep_ce) /
                    static_cast<double>(nr);
        return loss;
    }
    }
    throw ContractError("loss_value: unknown loss kind");
}

namespace {

// dL/dlogits for the composite losses. The clamping in loss_value is flat
// below kProbEps, so clamped entries contribute zero gradient.
Matrix loss_logit_grad(const LossSpec& spec, const Matrix& logits,
                       const BatchTargets& targets) {
    const std::size_t n = logits.rows;
    const std::size_t nc = targets.current_count;
    const std::size_t nr = n - nc;
    const std::size_t k = logits.cols;
    Matrix probs = softmax_rows(logits);
    Matrix grad(n, k, 0.0);

    auto add_ce_row = [&](std::size_t i, double scale) {
        const double* p = probs.row(i);
        int y = targets.labels[i];
        if (p[y] <= kProbEps) return; // clamped: locally constant
        double* g = grad.row(i);
        for (std::size_t j = 0; j < k; ++j) g[j] += scale * p[j];
        g[y] -= scale;
    };

    switch (spec.kind) {
    case LossKind::cross_entropy: {
        double scale = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) add_ce_row(i, scale);
        break;
    }
    case LossKind::der: {
        if (nc > 0) {
            double cs = 1.0 / static_cast<double>(nc);
            for (std::size_t i = 0; i < nc; ++i) add_ce_row(i, cs);
        }
        if (nr > 0) {
            double rs = 1.0 / static_cast<double>(nr);
            for (std::size_t r = 0; r < nr; ++r) {
                std::size_t i = nc + r;
                const double* gl = logits.row(i);
                const double* zp = targets.replay_logits.row(r);
                double* g = grad.row(i);
                for (std::size_t j = 0; j < k; ++j)
                    g[j] += spec.alpha * 2.0 * (gl[j] - zp[j]) * rs;
                add_ce_row(i, spec.beta * rs);
            }
        }
        break;
    }
    case LossKind::sd: {
        if (nc > 0) {
            double cs = spec.lambda_t / static_cast<double>(nc);
            for (std::size_t i = 0; i < nc; ++i) add_ce_row(i, cs);
        }
        if (nr > 0) {
            double rs = (1.0 - spec.lambda_t) / static_cast<double>(nr);
            for (std::size_t r = 0; r < nr; ++r) {
                std::size_t i = nc + r;
                const double* p = probs.row(i);
                const double* zp = targets.replay_logits.row(r);
                std::vector<double> teacher(k);
                softmax_row(zp, teacher.data(), k);
                // d/dg_m KL(p'||softmax(g)) with clamping: s_m*P - p'_m*[s_m>eps],
                // P = sum of teacher mass on unclamped entries.
                double pass = 0.0;
                for (std::size_t j = 0; j < k; ++j)
                    if (p[j] > kProbEps) pass += teacher[j];
                double* g = grad.row(i);
                for (std::size_t j = 0; j < k; ++j) {
                    double d = p[j] * pass - (p[j] > kProbEps ? teacher[j] : 0.0);
                    g[j] += rs * spec.alpha * d;
                }
                add_ce_row(i, rs * (1.0 - spec.alpha));
            }
        }
        break;
    }
    }
    return grad;
}

} // namespace

Gradients backward(const ModelParams& model, const ForwardTrace& trace,
                   const LossSpec& spec, const BatchTargets& targets) {
    validate_targets(spec, trace.logits, targets);
    if (trace.activations.size() != model.layer_count())
        throw ContractError("backward: trace does not match model depth");

    const std::size_t L = model.layer_count();
    Gradients grads;
    grads.weights.reserve(L);
    grads.biases.reserve(L);
    for (std::size_t l = 0; l < L; ++l) {
        grads.weights.emplace_back(model.weights[l].rows, model.weights[l].cols, 0.0);
        grads.biases.emplace_back(model.biases[l].size(), 0.0);
    }

    // delta starts as dL/dlogits, then is pulled back layer by layer.
    Matrix delta = loss_logit_grad(spec, trace.logits, targets);
    for (std::size_t l = L; l-- > 0;) {
        const Matrix& a_in = trace.activations[l];
        Matrix& dw = grads.weights[l];
        std::vector<double>& db = grads.biases[l];
        for (std::size_t i = 0; i < delta.rows; ++i) {
            const double* drow = delta.row(i);
            const double* arow = a_in.row(i);
            for (std::size_t j = 0; j < dw.rows; ++j) {
                double dj = drow[j];
                if (dj == 0.0) continue;
                double* wrow = dw.row(j);
                for (std::size_t c = 0; c < dw.cols; ++c) wrow[c] += dj * arow[c];
                db[j] += dj;
            }
        }
        if (l == 0) break;
        const Matrix& w = model.weights[l];
        Matrix prev(delta.rows, w.cols, 0.0);
        for (std::size_t i = 0; i < delta.rows; ++i) {
            const double* drow = delta.row(i);
            const double* arow = a_in.row(i); // post-ReLU output of layer l-1
            double* prow = prev.row(i);
            for (std::size_t j = 0; j < w.rows; ++j) {
                double dj = drow[j];
                if (dj == 0.0) continue;
                const double* wrow = w.row(j);
                for (std::size_t c = 0; c < w.cols; ++c) prow[c] += dj * wrow[c];
            }
            // ReLU mask: gradient passes only where the unit was active.
            for (std::size_t c = 0; c < w.cols; ++c)
                if (arow[c] <= 0.0) prow[c] = 0.0;
        }
        delta = std::move(prev);
    }
    return grads;
}

ModelParams sgd_step(ModelParams model, const Gradients& grads, double lr,
                     double momentum, double weight_decay) {
    if (grads.weights.size() != model.layer_count())
        throw ShapeError("sgd_step: gradient layer count mismatch");
    if (!grads.finite())
        throw NumericError("sgd_step: non-finite gradient");
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        if (!grads.weights[l].same_shape(model.weights[l]) ||
            grads.biases[l].size() != model.biases[l].size())
            throw ShapeError("sgd_step: gradient shape mismatch at layer " + std::to_string(l));
        Matrix& w = model.weights[l];
        Matrix& vw = model.weight_momentum[l];
        const Matrix& gw = grads.weights[l];
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            vw.data[i] = momentum * vw.data[i] + gw.data[i] + weight_decay * w.data[i];
            w.data[i] -= lr * vw.data[i];
        }
        std::vector<double>& b = model.biases[l];
        std::vector<double>& vb = model.bias_momentum[l];
        const std::vector<double>& gb = grads.biases[l];
        for (std::size_t i = 0; i < b.size(); ++i) {
            vb[i] = momentum * vb[i] + gb[i] + weight_decay * b[i];
            b[i] -= lr * vb[i];
        }
    }
    return model;
}

double grad_check(const ModelParams& model, const Matrix& X, const LossSpec& spec,
                  const BatchTargets& targets, double fd_step) {
    ForwardTrace trace = forward(model, X);
    Gradients analytic = backward(model, trace, spec, targets);

    ModelParams probe = model;
    auto eval = [&]() { return loss_value(spec, forward(probe, X).logits, targets); };

    double max_rel = 0.0;
    auto check_one = [&](double& param, double a) {
        double orig = param;
        param = orig + fd_step;
        double up = eval();
        param = orig - fd_step;
        double down = eval();
        param = orig;
        double fd = (up - down) / (2.0 * fd_step);
        double rel = std::abs(a - fd) / std::max(1e-8, std::abs(a) + std::abs(fd));
        max_rel = std::max(max_rel, rel);
    };

    for (std::size_t l = 0; l < probe.layer_count(); ++l) {
        for (std::size_t i = 0; i < probe.weights[l].data.size(); ++i)
            check_one(probe.weights[l].data[i], analytic.weights[l].data[i]);
        for (std::size_t i = 0; i < probe.biases[l].size(); ++i)
            check_one(probe.biases[l][i], analytic.biases[l][i]);
    }
    return max_rel;
}

} // namespace cal
