#include "cal/eval.hpp"

#include "cal/acquisition.hpp"
#include "cal/errors.hpp"

namespace cal {

namespace {

std::size_t argmax_row(const double* row, std::size_t k) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
        if (row[j] > row[best]) best = j; // strict: ties keep the smaller index
    return best;
}

} // namespace

double eval_accuracy_subset(const ModelParams& model, const Dataset& ds,
                            const std::vector<std::size_t>& indices) {
    if (indices.empty())
        throw ContractError("eval_accuracy: empty evaluation set");
    Matrix logits = forward(model, features_of(ds, indices)).logits;
    std::size_t correct = 0;
    for (std::size_t r = 0; r < indices.size(); ++r) {
        // argmax of softmax equals argmax of logits
        if (argmax_row(logits.row(r), logits.cols) ==
            static_cast<std::size_t>(ds.examples[indices[r]].label))
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

double eval_accuracy(const ModelParams& model, const Dataset& ds) {
    return eval_accuracy_subset(model, ds, all_indices(ds));
}

std::vector<double> eval_entropies(const ModelParams& model, const Dataset& ds) {
    Matrix probs = softmax_rows(forward(model, features_of(ds, all_indices(ds))).logits);
    std::vector<double> h(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i)
        h[i] = score_entropy_row(probs.row(i), probs.cols);
    return h;
}

} // namespace cal
