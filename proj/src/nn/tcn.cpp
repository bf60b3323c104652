#include "panograph/nn/tcn.hpp"

#include "panograph/errors.hpp"

namespace panograph::nn {

namespace {

std::size_t branch_width(std::size_t out) {
  if (out % MultiScaleTcn::kBranches != 0) {
    throw ConfigError("multi-scale TCN output channels (" + std::to_string(out) + ") must be divisible by 4");
  }
  return out / MultiScaleTcn::kBranches;
}

std::string branch_name(const std::string& prefix, int index) { return prefix + ".branch" + std::to_string(index); }

}  // namespace

MultiScaleTcn::MultiScaleTcn(const std::string& prefix, std::size_t in, std::size_t out, std::size_t stride)
    : width_(branch_width(out)),
      dilated_{ConvBranch{Conv1x1(branch_name(prefix, 1) + ".bottleneck", in, width_),
                          BatchNorm(branch_name(prefix, 1) + ".bn", width_), ReLU{},
                          TemporalConv(branch_name(prefix, 1) + ".conv", width_, width_, 3, 1, stride)},
               ConvBranch{Conv1x1(branch_name(prefix, 2) + ".bottleneck", in, width_),
                          BatchNorm(branch_name(prefix, 2) + ".bn", width_), ReLU{},
                          TemporalConv(branch_name(prefix, 2) + ".conv", width_, width_, 3, 2, stride)}},
      pooled_{Conv1x1(branch_name(prefix, 3) + ".bottleneck", in, width_),
              BatchNorm(branch_name(prefix, 3) + ".bn", width_), ReLU{}, TemporalMaxPool(stride)},
      pointwise_(branch_name(prefix, 4) + ".bottleneck", in, width_, stride) {}

Tensor MultiScaleTcn::branch_forward(std::size_t branch, const Tensor& x, Mode mode) {
  switch (branch) {
    case 0:
    case 1: {
      auto& br = dilated_[branch];
      return br.conv.forward(br.relu.forward(br.bn.forward(br.bottleneck.forward(x), mode)));
    }
    case 2:
      return pooled_.pool.forward(pooled_.relu.forward(pooled_.bn.forward(pooled_.bottleneck.forward(x), mode)));
    case 3:
      return pointwise_.forward(x);
    default:
      throw ContractError("multi-scale TCN has four branches");
  }
}

Tensor MultiScaleTcn::forward(const Tensor& x, Mode mode) {
  std::array<Tensor, kBranches> outs;
  for (std::size_t b = 0; b < kBranches; ++b) outs[b] = branch_forward(b, x, mode);
  return concat_channels({&outs[0], &outs[1], &outs[2], &outs[3]});
}

Tensor MultiScaleTcn::backward(const Tensor& dy) {
  Tensor dx;
  for (std::size_t b = 0; b < kBranches; ++b) {
    const Tensor slice = slice_channels(dy, b * width_, width_);
    Tensor g;
    if (b < 2) {
      auto& br = dilated_[b];
      g = br.bottleneck.backward(br.bn.backward(br.relu.backward(br.conv.backward(slice))));
    } else if (b == 2) {
      g = pooled_.bottleneck.backward(pooled_.bn.backward(pooled_.relu.backward(pooled_.pool.backward(slice))));
    } else {
      g = pointwise_.backward(slice);
    }
    if (dx.empty()) {
      dx = std::move(g);
    } else {
      dx += g;
    }
  }
  return dx;
}

void MultiScaleTcn::fold(Signature& sig) const {
  for (const auto& br : dilated_) br.relu.fold(sig);
  pooled_.relu.fold(sig);
  pooled_.pool.fold(sig);
}

void MultiScaleTcn::collect(ParamRefs& refs) {
  for (auto& br : dilated_) {
    br.bottleneck.collect(refs);
    br.bn.collect(refs);
    br.conv.collect(refs);
  }
  pooled_.bottleneck.collect(refs);
  pooled_.bn.collect(refs);
  pointwise_.collect(refs);
}

}  // namespace panograph::nn
