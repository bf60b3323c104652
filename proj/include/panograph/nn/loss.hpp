#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "panograph/tensor.hpp"

namespace panograph::nn {

struct LossResult {
  double loss = 0.0;  // mean over the batch
  Tensor grad;        // d(loss)/d(logits), same shape as logits
};

/// Softmax cross-entropy averaged over the batch. logits is [B, K].
LossResult cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

/// Numerically stable softmax of one row.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace panograph::nn
