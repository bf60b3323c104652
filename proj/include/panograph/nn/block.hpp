#pragma once

#include <memory>
#include <optional>
#include <string>

#include "panograph/nn/attention.hpp"
#include "panograph/nn/layers.hpp"
#include "panograph/nn/tcn.hpp"

namespace panograph::nn {

struct BlockShape {
  std::size_t in;
  std::size_t out;
  std::size_t stride = 1;
  std::size_t persons;
  std::size_t nodes_per_person;
  std::size_t reduction = 4;
};

/// SGC, multi-scale TCN and person attention, each with its own residual link:
///   y1 = R1(x)  + ReLU(BN(SGC(x)))        R1 = BN(1x1 projection) when channels change
///   y2 = R2(y1) + ReLU(BN(TCN(y1)))       R2 = BN(strided 1x1 projection) when stride > 1
///   y3 = y2 + y2 * att(y2)
class BasicBlock {
 public:
  BasicBlock(const std::string& prefix, const BlockShape& shape,
             std::shared_ptr<const graph::PartitionedAdjacency> adjacency);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& dy);
  void collect(ParamRefs& refs);
  void fold(Signature& sig) const;

  SpatialGraphConv sgc;
  BatchNorm sgc_bn;
  std::optional<Conv1x1> sgc_residual;
  std::optional<BatchNorm> sgc_residual_bn;
  MultiScaleTcn tcn;
  BatchNorm tcn_bn;
  std::optional<Conv1x1> tcn_residual;
  std::optional<BatchNorm> tcn_residual_bn;
  PersonAttention attention;

 private:
  ReLU sgc_relu_;
  ReLU tcn_relu_;
};

}  // namespace panograph::nn
