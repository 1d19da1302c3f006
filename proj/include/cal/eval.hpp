#pragma once

#include <vector>

#include "cal/dataset.hpp"
#include "cal/nn.hpp"

namespace cal {

// Argmax-of-softmax accuracy; argmax ties go to the smaller class index.
double eval_accuracy(const ModelParams& model, const Dataset& ds);
double eval_accuracy_subset(const ModelParams& model, const Dataset& ds,
                            const std::vector<std::size_t>& indices);

// Per-example prediction entropies under the model.
std::vector<double> eval_entropies(const ModelParams& model, const Dataset& ds);

} // namespace cal
