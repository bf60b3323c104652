#pragma once

#include <array>
#include <string>

#include "panograph/nn/layers.hpp"

namespace panograph::nn {

/// Four-branch multi-scale temporal convolution. Each branch produces out/4
/// channels; outputs are concatenated in branch order:
///   1. bottleneck -> BN -> ReLU -> 3x1 conv, dilation 1
///   2. bottleneck -> BN -> ReLU -> 3x1 conv, dilation 2
///   3. bottleneck -> BN -> ReLU -> 3x1 max pool
///   4. bottleneck only
/// The temporal stride applies to every branch, so T' = ceil(T / stride).
class MultiScaleTcn {
 public:
  static constexpr std::size_t kBranches = 4;

  MultiScaleTcn(const std::string& prefix, std::size_t in, std::size_t out, std::size_t stride);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& dy);
  void collect(ParamRefs& refs);
  void fold(Signature& sig) const;

  /// Output of a single branch, evaluated standalone (no caching side effects on other branches).
  Tensor branch_forward(std::size_t branch, const Tensor& x, Mode mode);

  std::size_t branch_channels() const { return width_; }

 private:
  struct ConvBranch {
    Conv1x1 bottleneck;
    BatchNorm bn;
    ReLU relu;
    TemporalConv conv;
  };
  struct PoolBranch {
    Conv1x1 bottleneck;
    BatchNorm bn;
    ReLU relu;
    TemporalMaxPool pool;
  };

  std::size_t width_;
  std::array<ConvBranch, 2> dilated_;
  PoolBranch pooled_;
  Conv1x1 pointwise_;
};

}  // namespace panograph::nn
