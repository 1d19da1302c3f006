#pragma once

#include <cstdint>
#include <vector>

#include "cal/matrix.hpp"

namespace cal {

// Probabilities and log arguments are clamped below by this before taking logs.
inline constexpr double kProbEps = 1e-12;

// Dense feed-forward classifier: ReLU hidden layers, linear output head.
// weights[l] has shape layer_dims[l+1] x layer_dims[l].
struct ModelParams {
    std::vector<std::size_t> layer_dims;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    std::vector<Matrix> weight_momentum;
    std::vector<std::vector<double>> bias_momentum;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t num_classes() const { return layer_dims.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t param_count() const;
    bool finite() const;
};

// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases, zero momentum.
ModelParams init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

struct ForwardTrace {
    Matrix logits;       // batch x k
    Matrix penultimate;  // batch x last hidden dim (input itself for a 1-layer model)
    // activations[0] is the input, then the post-ReLU output of each hidden layer.
    std::vector<Matrix> activations;
};

ForwardTrace forward(const ModelParams& model, const Matrix& X);

// Numerically stabilized softmax (max subtraction).
void softmax_row(const double* logits, double* out, std::size_t k);
std::vector<double> softmax(const std::vector<double>& logits);
Matrix softmax_rows(const Matrix& logits);

// Mean of -log p[label] over the batch.
double loss_cross_entropy(const Matrix& probs, const std::vector<int>& labels);

// KL(teacher || student), student clamped below by kProbEps before log.
double loss_kl(const std::vector<double>& teacher, const std::vector<double>& student);

// Squared Euclidean distance between logit vectors; batch averaging is the
// caller's job.
double loss_mse_logits(const std::vector<double>& g, const std::vector<double>& z_prime);

enum class LossKind { cross_entropy, der, sd };

struct LossSpec {
    LossKind kind = LossKind::cross_entropy;
    double alpha = 0.0;   // der: MSE weight >= 0; sd: KL mixing weight in [0,1]
    double beta = 0.0;    // der: replay classification weight >= 0
    double lambda_t = 1.0; // sd: stability/plasticity weight in (0,1]
};

// Targets for a concatenated batch: rows [0, current_count) come from the
// current task, the remainder is the replay batch. replay_logits row r holds
// the stored z' for batch row current_count + r.
struct BatchTargets {
    std::vector<int> labels;
    Matrix replay_logits;
    std::size_t current_count = 0;
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    bool finite() const;
};

// Scalar value of the composite loss for (logits, targets). Pure function;
// grad_check differentiates it by finite differences.
double loss_value(const LossSpec& spec, const Matrix& logits, const BatchTargets& targets);

// Analytic gradients of loss_value w.r.t. every weight and bias.
Gradients backward(const ModelParams& model, const ForwardTrace& trace,
                   const LossSpec& spec, const BatchTargets& targets);

// v <- momentum*v + g + weight_decay*theta;  theta <- theta - lr*v.
// Throws NumericError on non-finite gradients.
ModelParams sgd_step(ModelParams model, const Gradients& grads, double lr,
                     double momentum, double weight_decay);

// Max over parameters of |analytic - fd| / max(1e-8, |analytic| + |fd|),
// central differences with the given step.
double grad_check(const ModelParams& model, const Matrix& X, const LossSpec& spec,
                  const BatchTargets& targets, double fd_step);

} // namespace cal
