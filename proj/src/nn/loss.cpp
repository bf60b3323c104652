#include "panograph/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "panograph/errors.hpp"

namespace panograph::nn {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

LossResult cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2) throw ContractError("cross entropy expects [B, K] logits");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  if (K < 2) throw ContractError("cross entropy needs at least two classes");
  if (labels.size() != B) throw ContractError("label count does not match batch size");
  LossResult r;
  r.grad = Tensor(logits.shape());
  for (std::size_t b = 0; b < B; ++b) {
    if (labels[b] >= K) {
      throw InputError("label " + std::to_string(labels[b]) + " out of range for " + std::to_string(K) + " classes");
    }
    const std::span<const double> row(logits.data() + b * K, K);
    const double top = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - top);
    const double log_norm = top + std::log(total);
    r.loss += log_norm - row[labels[b]];
    for (std::size_t k = 0; k < K; ++k) {
      const double p = std::exp(row[k] - log_norm);
      r.grad[b * K + k] = (p - (k == labels[b] ? 1.0 : 0.0)) / static_cast<double>(B);
    }
  }
  r.loss /= static_cast<double>(B);
  return r;
}

}  // namespace panograph::nn
