#pragma once

// Primitive layers with explicit forward/backward. Activations are
// [B, C, T, N] tensors. Each layer caches what its backward needs during
// forward and accumulates parameter gradients into Param::grad.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "panograph/graph.hpp"
#include "panograph/tensor.hpp"

namespace panograph::nn {

enum class Mode { Train, Eval };

/// FNV-1a digest of the piecewise decisions (ReLU gates, max-pool winners) of a
/// forward pass. Two evaluations with equal digests lie on the same smooth piece.
class Signature {
 public:
  void fold(std::uint64_t value) {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (value >> (8 * i)) & 0xffu;
      state_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

// Kaiming: U(+-sqrt(6 / fan_in)), the ReLU gain. Linear: U(+-1 / sqrt(fan_in)), for layers
// feeding a softmax.
enum class Init { Kaiming, Linear, Zeros, Ones };

struct Param {
  Param() = default;
  Param(std::string name, Shape shape, Init init, std::size_t fan_in = 1, bool decay = true);

  std::string name;
  Tensor value;
  Tensor grad;
  Init init = Init::Zeros;
  std::size_t fan_in = 1;
  bool decay = true;  // batch-norm affine parameters opt out of weight decay

  void initialize(std::mt19937_64& rng);
};

/// Persistent non-learnable state, e.g. batch-norm running statistics.
struct Buffer {
  std::string name;
  Tensor value;
};

struct ParamRefs {
  std::vector<Param*> params;
  std::vector<Buffer*> buffers;
};

/// Pointwise channel mixing W[in,out] with optional temporal subsampling.
class Conv1x1 {
 public:
  Conv1x1(const std::string& prefix, std::size_t in, std::size_t out, std::size_t stride = 1);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(ParamRefs& refs);

  Param weight;
  Param bias;

 private:
  std::size_t in_;
  std::size_t out_;
  std::size_t stride_;
  Shape input_shape_;
  Tensor sampled_;
};

class BatchNorm {
 public:
  BatchNorm(const std::string& prefix, std::size_t channels, double momentum = 0.9, double eps = 1e-5);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& dy);
  void collect(ParamRefs& refs);

  Param gamma;
  Param beta;
  Buffer running_mean;
  Buffer running_var;

 private:
  std::size_t channels_;
  double momentum_;
  double eps_;
  Mode mode_ = Mode::Train;
  Tensor normalized_;
  std::vector<double> inv_std_;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy) const;
  void fold(Signature& sig) const;

 private:
  std::vector<std::uint8_t> active_;
};

/// sum_k (E_k * A_k) X W_k + bias, applied per frame over the node axis.
class SpatialGraphConv {
 public:
  SpatialGraphConv(const std::string& prefix, std::size_t in, std::size_t out,
                   std::shared_ptr<const graph::PartitionedAdjacency> adjacency);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(ParamRefs& refs);

  std::vector<Param> weights;  // K of [in, out]
  std::vector<Param> masks;    // K of [N, N], edge importance
  Param bias;

  const graph::PartitionedAdjacency& adjacency() const { return *adjacency_; }
  void set_adjacency(std::shared_ptr<const graph::PartitionedAdjacency> adjacency);

 private:
  std::size_t in_;
  std::size_t out_;
  std::shared_ptr<const graph::PartitionedAdjacency> adjacency_;
  Tensor input_;
  std::vector<Tensor> mixed_;      // x W_k
  std::vector<Tensor> effective_;  // E_k * A_k
};

/// Kernel-`taps` convolution along time with dilation and stride, same padding.
class TemporalConv {
 public:
  TemporalConv(const std::string& prefix, std::size_t in, std::size_t out, std::size_t taps, std::size_t dilation,
               std::size_t stride);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(ParamRefs& refs);

  Param weight;  // [out, in, taps]
  Param bias;

 private:
  std::size_t in_, out_, taps_, dilation_, stride_;
  Tensor input_;
};

/// Max over a 3-frame window with the given stride; out-of-range frames are ignored.
class TemporalMaxPool {
 public:
  explicit TemporalMaxPool(std::size_t stride, std::size_t window = 3);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy) const;
  void fold(Signature& sig) const;

 private:
  std::size_t stride_;
  std::size_t window_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

/// Global average pool over (T, N) followed by an affine classifier.
class Classifier {
 public:
  Classifier(const std::string& prefix, std::size_t channels, std::size_t classes);

  Tensor forward(const Tensor& x);  // [B, C, T, N] -> [B, classes]
  Tensor backward(const Tensor& dlogits);
  void collect(ParamRefs& refs);

  Param weight;  // [C, classes]
  Param bias;

 private:
  std::size_t channels_;
  std::size_t classes_;
  Shape input_shape_;
  Tensor pooled_;
};

/// Concatenates [B, C_i, T, N] tensors along the channel axis.
Tensor concat_channels(const std::vector<const Tensor*>& parts);
/// Channel slice [begin, begin + count) of a [B, C, T, N] tensor.
Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count);
/// Elementwise sum of two same-shaped tensors.
Tensor add(const Tensor& a, const Tensor& b);

}  // namespace panograph::nn
