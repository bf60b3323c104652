#include "panograph/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panograph/errors.hpp"
#include "panograph/kernels.hpp"

namespace panograph::nn {

namespace {

void require_rank4(const Tensor& x, const char* what) {
  if (x.rank() != 4) throw ContractError(std::string(what) + ": expected [B, C, T, N], got " + shape_string(x.shape()));
}

void require_channels(const Tensor& x, std::size_t channels, const char* what) {
  require_rank4(x, what);
  if (x.dim(1) != channels) {
    throw ContractError(std::string(what) + ": expected " + std::to_string(channels) + " channels, got " +
                        std::to_string(x.dim(1)));
  }
}

void add_channel_bias(Tensor& y, const Tensor& bias) {
  const std::size_t B = y.dim(0), C = y.dim(1), L = y.dim(2) * y.dim(3);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      double* row = y.data() + (b * C + c) * L;
      for (std::size_t l = 0; l < L; ++l) row[l] += bias[c];
    }
}

void accumulate_channel_bias_grad(const Tensor& dy, Tensor& grad) {
  const std::size_t B = dy.dim(0), C = dy.dim(1), L = dy.dim(2) * dy.dim(3);
  for (std::size_t c = 0; c < C; ++c) {
    double s = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const double* row = dy.data() + (b * C + c) * L;
      for (std::size_t l = 0; l < L; ++l) s += row[l];
    }
    grad[c] += s;
  }
}

Tensor subsample_time(const Tensor& x, std::size_t stride) {
  if (stride == 1) return x;
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), N = x.dim(3);
  const std::size_t To = (T + stride - 1) / stride;
  Tensor out({B, C, To, N});
  for (std::size_t bc = 0; bc < B * C; ++bc)
    for (std::size_t t = 0; t < To; ++t)
      std::copy_n(x.data() + (bc * T + t * stride) * N, N, out.data() + (bc * To + t) * N);
  return out;
}

Tensor upsample_time_grad(const Tensor& dy, const Shape& input_shape, std::size_t stride) {
  if (stride == 1) return dy;
  Tensor dx(input_shape);
  const std::size_t BC = input_shape[0] * input_shape[1], T = input_shape[2], N = input_shape[3];
  const std::size_t To = dy.dim(2);
  for (std::size_t bc = 0; bc < BC; ++bc)
    for (std::size_t t = 0; t < To; ++t)
      std::copy_n(dy.data() + (bc * To + t) * N, N, dx.data() + (bc * T + t * stride) * N);
  return dx;
}

}  // namespace

Param::Param(std::string name_, Shape shape, Init init_, std::size_t fan_in_, bool decay_)
    : name(std::move(name_)), value(shape), grad(shape), init(init_), fan_in(fan_in_), decay(decay_) {}

void Param::initialize(std::mt19937_64& rng) {
  switch (init) {
    case Init::Zeros: value.fill(0.0); break;
    case Init::Ones: value.fill(1.0); break;
    case Init::Kaiming: {
      const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : value.values()) v = dist(rng);
      break;
    }
    case Init::Linear: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : value.values()) v = dist(rng);
      break;
    }
  }
  grad.zero();
}

// ---------------------------------------------------------------- Conv1x1

Conv1x1::Conv1x1(const std::string& prefix, std::size_t in, std::size_t out, std::size_t stride)
    : weight(prefix + ".weight", {in, out}, Init::Kaiming, in),
      bias(prefix + ".bias", {out}, Init::Zeros),
      in_(in),
      out_(out),
      stride_(stride) {}

Tensor Conv1x1::forward(const Tensor& x) {
  require_channels(x, in_, "conv1x1");
  input_shape_ = x.shape();
  sampled_ = subsample_time(x, stride_);
  const std::size_t B = x.dim(0), L = sampled_.dim(2) * sampled_.dim(3);
  Tensor y({B, out_, sampled_.dim(2), sampled_.dim(3)});
  kernels::mix_forward({B, in_, out_, L}, sampled_.values(), weight.value.values(), y.values());
  add_channel_bias(y, bias.value);
  return y;
}

Tensor Conv1x1::backward(const Tensor& dy) {
  const std::size_t B = sampled_.dim(0), L = sampled_.dim(2) * sampled_.dim(3);
  require_shape(dy, {B, out_, sampled_.dim(2), sampled_.dim(3)}, "conv1x1 backward");
  accumulate_channel_bias_grad(dy, bias.grad);
  const kernels::MixDims d{B, in_, out_, L};
  kernels::mix_backward_weight(d, sampled_.values(), dy.values(), weight.grad.values());
  Tensor dx(sampled_.shape());
  kernels::mix_backward_input(d, dy.values(), weight.value.values(), dx.values());
  return upsample_time_grad(dx, input_shape_, stride_);
}

void Conv1x1::collect(ParamRefs& refs) {
  refs.params.push_back(&weight);
  refs.params.push_back(&bias);
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(const std::string& prefix, std::size_t channels, double momentum, double eps)
    : gamma(prefix + ".gamma", {channels}, Init::Ones, 1, false),
      beta(prefix + ".beta", {channels}, Init::Zeros, 1, false),
      running_mean{prefix + ".running_mean", Tensor({channels}, 0.0)},
      running_var{prefix + ".running_var", Tensor({channels}, 1.0)},
      channels_(channels),
      momentum_(momentum),
      eps_(eps) {}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
  require_channels(x, channels_, "batchnorm");
  mode_ = mode;
  const std::size_t B = x.dim(0), C = channels_, L = x.dim(2) * x.dim(3);
  const double count = static_cast<double>(B * L);
  Tensor y(x.shape());
  normalized_ = Tensor(x.shape());
  inv_std_.assign(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    double mean;
    double var;
    if (mode == Mode::Train) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l) s += x[(b * C + c) * L + l];
      mean = s / count;
      double q = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l) {
          const double d = x[(b * C + c) * L + l] - mean;
          q += d * d;
        }
      var = q / count;
      const double unbiased = count > 1.0 ? q / (count - 1.0) : var;
      running_mean.value[c] = momentum_ * running_mean.value[c] + (1.0 - momentum_) * mean;
      running_var.value[c] = momentum_ * running_var.value[c] + (1.0 - momentum_) * unbiased;
    } else {
      mean = running_mean.value[c];
      var = running_var.value[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t l = 0; l < L; ++l) {
        const std::size_t i = (b * C + c) * L + l;
        normalized_[i] = (x[i] - mean) * inv;
        y[i] = gamma.value[c] * normalized_[i] + beta.value[c];
      }
  }
  return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
  require_shape(dy, normalized_.shape(), "batchnorm backward");
  const std::size_t B = dy.dim(0), C = channels_, L = dy.dim(2) * dy.dim(3);
  const double count = static_cast<double>(B * L);
  Tensor dx(dy.shape());
  for (std::size_t c = 0; c < C; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t l = 0; l < L; ++l) {
        const std::size_t i = (b * C + c) * L + l;
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * normalized_[i];
      }
    beta.grad[c] += sum_dy;
    gamma.grad[c] += sum_dy_xhat;
    const double scale = gamma.value[c] * inv_std_[c];
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t l = 0; l < L; ++l) {
        const std::size_t i = (b * C + c) * L + l;
        if (mode_ == Mode::Train) {
          dx[i] = scale * (dy[i] - sum_dy / count - normalized_[i] * sum_dy_xhat / count);
        } else {
          dx[i] = scale * dy[i];
        }
      }
  }
  return dx;
}

void BatchNorm::collect(ParamRefs& refs) {
  refs.params.push_back(&gamma);
  refs.params.push_back(&beta);
  refs.buffers.push_back(&running_mean);
  refs.buffers.push_back(&running_var);
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::forward(const Tensor& x) {
  Tensor y(x.shape());
  active_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    active_[i] = x[i] > 0.0;
    y[i] = active_[i] ? x[i] : 0.0;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& dy) const {
  if (dy.size() != active_.size()) throw ContractError("relu backward: shape mismatch");
  Tensor dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = active_[i] ? dy[i] : 0.0;
  return dx;
}

void ReLU::fold(Signature& sig) const {
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < active_.size(); ++i) {
    word = (word << 1) | (active_[i] ? 1u : 0u);
    if (i % 64 == 63) sig.fold(word);
  }
  sig.fold(word);
}

// ---------------------------------------------------------------- SpatialGraphConv

SpatialGraphConv::SpatialGraphConv(const std::string& prefix, std::size_t in, std::size_t out,
                                   std::shared_ptr<const graph::PartitionedAdjacency> adjacency)
    : bias(prefix + ".bias", {out}, Init::Zeros), in_(in), out_(out), adjacency_(std::move(adjacency)) {
  if (!adjacency_) throw ContractError("spatial graph conv requires an adjacency");
  const std::size_t N = adjacency_->size;
  for (std::size_t k = 0; k < graph::PartitionedAdjacency::kPartitions; ++k) {
    weights.emplace_back(prefix + ".W" + std::to_string(k), Shape{in, out}, Init::Kaiming, in);
    masks.emplace_back(prefix + ".E" + std::to_string(k), Shape{N, N}, Init::Ones);
  }
}

void SpatialGraphConv::set_adjacency(std::shared_ptr<const graph::PartitionedAdjacency> adjacency) {
  if (!adjacency || adjacency->size != adjacency_->size) throw ContractError("replacement adjacency size mismatch");
  adjacency_ = std::move(adjacency);
}

Tensor SpatialGraphConv::forward(const Tensor& x) {
  require_channels(x, in_, "sgc");
  const std::size_t N = adjacency_->size;
  if (x.dim(3) != N) {
    throw ContractError("sgc: input has " + std::to_string(x.dim(3)) + " nodes, graph has " + std::to_string(N));
  }
  const std::size_t B = x.dim(0), T = x.dim(2);
  input_ = x;
  mixed_.clear();
  effective_.clear();
  Tensor y({B, out_, T, N});
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Tensor z({B, out_, T, N});
    kernels::mix_forward({B, in_, out_, T * N}, x.values(), weights[k].value.values(), z.values());
    Tensor g({N, N});
    const Tensor& a = adjacency_->partitions[k];
    for (std::size_t i = 0; i < N * N; ++i) g[i] = masks[k].value[i] * a[i];
    kernels::aggregate_forward({B * out_ * T, N}, z.values(), g.values(), y.values());
    mixed_.push_back(std::move(z));
    effective_.push_back(std::move(g));
  }
  add_channel_bias(y, bias.value);
  return y;
}

Tensor SpatialGraphConv::backward(const Tensor& dy) {
  const std::size_t B = input_.dim(0), T = input_.dim(2), N = adjacency_->size;
  require_shape(dy, {B, out_, T, N}, "sgc backward");
  accumulate_channel_bias_grad(dy, bias.grad);
  Tensor dx(input_.shape());
  const kernels::AggregateDims ad{B * out_ * T, N};
  const kernels::MixDims md{B, in_, out_, T * N};
  for (std::size_t k = 0; k < weights.size(); ++k) {
    Tensor dz(mixed_[k].shape());
    kernels::aggregate_backward_input(ad, dy.values(), effective_[k].values(), dz.values());
    Tensor dg({N, N});
    kernels::aggregate_backward_matrix(ad, dy.values(), mixed_[k].values(), dg.values());
    const Tensor& a = adjacency_->partitions[k];
    for (std::size_t i = 0; i < N * N; ++i) masks[k].grad[i] += dg[i] * a[i];
    kernels::mix_backward_weight(md, input_.values(), dz.values(), weights[k].grad.values());
    kernels::mix_backward_input(md, dz.values(), weights[k].value.values(), dx.values());
  }
  return dx;
}

void SpatialGraphConv::collect(ParamRefs& refs) {
  for (auto& w : weights) refs.params.push_back(&w);
  for (auto& e : masks) refs.params.push_back(&e);
  refs.params.push_back(&bias);
}

// ---------------------------------------------------------------- TemporalConv

TemporalConv::TemporalConv(const std::string& prefix, std::size_t in, std::size_t out, std::size_t taps,
                           std::size_t dilation, std::size_t stride)
    : weight(prefix + ".weight", {out, in, taps}, Init::Kaiming, in * taps),
      bias(prefix + ".bias", {out}, Init::Zeros),
      in_(in),
      out_(out),
      taps_(taps),
      dilation_(dilation),
      stride_(stride) {
  if (taps % 2 == 0) throw ConfigError("temporal kernel size must be odd");
  if (stride == 0 || dilation == 0) throw ConfigError("temporal stride and dilation must be positive");
}

Tensor TemporalConv::forward(const Tensor& x) {
  require_channels(x, in_, "temporal conv");
  input_ = x;
  const kernels::TemporalDims d{x.dim(0), in_, out_, x.dim(2), x.dim(3), taps_, dilation_, stride_};
  Tensor y({x.dim(0), out_, d.out_time(), x.dim(3)});
  kernels::temporal_forward(d, x.values(), weight.value.values(), y.values());
  add_channel_bias(y, bias.value);
  return y;
}

Tensor TemporalConv::backward(const Tensor& dy) {
  const kernels::TemporalDims d{input_.dim(0), in_, out_, input_.dim(2), input_.dim(3), taps_, dilation_, stride_};
  require_shape(dy, {input_.dim(0), out_, d.out_time(), input_.dim(3)}, "temporal conv backward");
  accumulate_channel_bias_grad(dy, bias.grad);
  kernels::temporal_backward_weight(d, input_.values(), dy.values(), weight.grad.values());
  Tensor dx(input_.shape());
  kernels::temporal_backward_input(d, dy.values(), weight.value.values(), dx.values());
  return dx;
}

void TemporalConv::collect(ParamRefs& refs) {
  refs.params.push_back(&weight);
  refs.params.push_back(&bias);
}

// ---------------------------------------------------------------- TemporalMaxPool

TemporalMaxPool::TemporalMaxPool(std::size_t stride, std::size_t window) : stride_(stride), window_(window) {
  if (stride == 0 || window % 2 == 0) throw ConfigError("max pool needs positive stride and odd window");
}

Tensor TemporalMaxPool::forward(const Tensor& x) {
  require_rank4(x, "max pool");
  input_shape_ = x.shape();
  const std::size_t BC = x.dim(0) * x.dim(1), T = x.dim(2), N = x.dim(3);
  const std::size_t To = (T + stride_ - 1) / stride_;
  const long half = static_cast<long>(window_ / 2);
  Tensor y({x.dim(0), x.dim(1), To, N});
  argmax_.assign(y.size(), 0);
  for (std::size_t bc = 0; bc < BC; ++bc)
    for (std::size_t to = 0; to < To; ++to)
      for (std::size_t n = 0; n < N; ++n) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_index = 0;
        const long centre = static_cast<long>(to * stride_);
        for (long t = centre - half; t <= centre + half; ++t) {
          if (t < 0 || t >= static_cast<long>(T)) continue;
          const std::size_t i = (bc * T + static_cast<std::size_t>(t)) * N + n;
          if (x[i] > best) {
            best = x[i];
            best_index = i;
          }
        }
        const std::size_t o = (bc * To + to) * N + n;
        y[o] = best;
        argmax_[o] = best_index;
      }
  return y;
}

Tensor TemporalMaxPool::backward(const Tensor& dy) const {
  if (dy.size() != argmax_.size()) throw ContractError("max pool backward: shape mismatch");
  Tensor dx(input_shape_);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax_[o]] += dy[o];
  return dx;
}

void TemporalMaxPool::fold(Signature& sig) const {
  for (std::size_t i : argmax_) sig.fold(i);
}

// ---------------------------------------------------------------- Classifier

Classifier::Classifier(const std::string& prefix, std::size_t channels, std::size_t classes)
    : weight(prefix + ".weight", {channels, classes}, Init::Linear, channels),
      bias(prefix + ".bias", {classes}, Init::Zeros),
      channels_(channels),
      classes_(classes) {}

Tensor Classifier::forward(const Tensor& x) {
  require_channels(x, channels_, "classifier");
  input_shape_ = x.shape();
  const std::size_t B = x.dim(0), L = x.dim(2) * x.dim(3);
  pooled_ = Tensor({B, channels_});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < channels_; ++c) {
      double s = 0.0;
      const double* row = x.data() + (b * channels_ + c) * L;
      for (std::size_t l = 0; l < L; ++l) s += row[l];
      pooled_[b * channels_ + c] = s / static_cast<double>(L);
    }
  Tensor logits({B, classes_});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 0; k < classes_; ++k) {
      double s = bias.value[k];
      for (std::size_t c = 0; c < channels_; ++c) s += pooled_[b * channels_ + c] * weight.value[c * classes_ + k];
      logits[b * classes_ + k] = s;
    }
  return logits;
}

Tensor Classifier::backward(const Tensor& dlogits) {
  const std::size_t B = input_shape_[0], L = input_shape_[2] * input_shape_[3];
  require_shape(dlogits, {B, classes_}, "classifier backward");
  Tensor dx(input_shape_);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t k = 0; k < classes_; ++k) bias.grad[k] += dlogits[b * classes_ + k];
    for (std::size_t c = 0; c < channels_; ++c) {
      double dp = 0.0;
      for (std::size_t k = 0; k < classes_; ++k) {
        const double g = dlogits[b * classes_ + k];
        weight.grad[c * classes_ + k] += pooled_[b * channels_ + c] * g;
        dp += weight.value[c * classes_ + k] * g;
      }
      const double share = dp / static_cast<double>(L);
      double* row = dx.data() + (b * channels_ + c) * L;
      for (std::size_t l = 0; l < L; ++l) row[l] = share;
    }
  }
  return dx;
}

void Classifier::collect(ParamRefs& refs) {
  refs.params.push_back(&weight);
  refs.params.push_back(&bias);
}

// ---------------------------------------------------------------- helpers

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Tensor& first = *parts.front();
  require_rank4(first, "concat");
  const std::size_t B = first.dim(0), T = first.dim(2), N = first.dim(3);
  std::size_t total = 0;
  for (const Tensor* p : parts) {
    require_rank4(*p, "concat");
    if (p->dim(0) != B || p->dim(2) != T || p->dim(3) != N) throw ContractError("concat: incompatible shapes");
    total += p->dim(1);
  }
  Tensor out({B, total, T, N});
  const std::size_t L = T * N;
  for (std::size_t b = 0; b < B; ++b) {
    std::size_t offset = 0;
    for (const Tensor* p : parts) {
      const std::size_t C = p->dim(1);
      std::copy_n(p->data() + b * C * L, C * L, out.data() + (b * total + offset) * L);
      offset += C;
    }
  }
  return out;
}

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank4(x, "slice");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2) * x.dim(3);
  if (begin + count > C) throw ContractError("slice: channel range out of bounds");
  Tensor out({B, count, x.dim(2), x.dim(3)});
  for (std::size_t b = 0; b < B; ++b) std::copy_n(x.data() + (b * C + begin) * L, count * L, out.data() + b * count * L);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out += b;
  return out;
}

}  // namespace panograph::nn
