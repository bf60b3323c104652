#include "panograph/nn/block.hpp"

namespace panograph::nn {

BasicBlock::BasicBlock(const std::string& prefix, const BlockShape& s,
                       std::shared_ptr<const graph::PartitionedAdjacency> adjacency)
    : sgc(prefix + ".sgc", s.in, s.out, std::move(adjacency)),
      sgc_bn(prefix + ".sgc_bn", s.out),
      tcn(prefix + ".tcn", s.out, s.out, s.stride),
      tcn_bn(prefix + ".tcn_bn", s.out),
      attention(prefix + ".att", s.out, s.persons, s.nodes_per_person, s.reduction) {
  if (s.in != s.out) {
    sgc_residual.emplace(prefix + ".sgc_res", s.in, s.out);
    sgc_residual_bn.emplace(prefix + ".sgc_res_bn", s.out);
  }
  if (s.stride != 1) {
    tcn_residual.emplace(prefix + ".tcn_res", s.out, s.out, s.stride);
    tcn_residual_bn.emplace(prefix + ".tcn_res_bn", s.out);
  }
}

Tensor BasicBlock::forward(const Tensor& x, Mode mode) {
  Tensor y1 = sgc_relu_.forward(sgc_bn.forward(sgc.forward(x), mode));
  y1 += sgc_residual ? sgc_residual_bn->forward(sgc_residual->forward(x), mode) : x;

  Tensor y2 = tcn_relu_.forward(tcn_bn.forward(tcn.forward(y1, mode), mode));
  y2 += tcn_residual ? tcn_residual_bn->forward(tcn_residual->forward(y1), mode) : y1;

  Tensor y3 = attention.forward(y2);
  y3 += y2;
  return y3;
}

Tensor BasicBlock::backward(const Tensor& dy3) {
  Tensor dy2 = attention.backward(dy3);
  dy2 += dy3;

  Tensor dy1 = tcn.backward(tcn_bn.backward(tcn_relu_.backward(dy2)));
  dy1 += tcn_residual ? tcn_residual->backward(tcn_residual_bn->backward(dy2)) : dy2;

  Tensor dx = sgc.backward(sgc_bn.backward(sgc_relu_.backward(dy1)));
  dx += sgc_residual ? sgc_residual->backward(sgc_residual_bn->backward(dy1)) : dy1;
  return dx;
}

void BasicBlock::fold(Signature& sig) const {
  sgc_relu_.fold(sig);
  tcn.fold(sig);
  tcn_relu_.fold(sig);
  attention.fold(sig);
}

void BasicBlock::collect(ParamRefs& refs) {
  sgc.collect(refs);
  sgc_bn.collect(refs);
  if (sgc_residual) {
    sgc_residual->collect(refs);
    sgc_residual_bn->collect(refs);
  }
  tcn.collect(refs);
  tcn_bn.collect(refs);
  if (tcn_residual) {
    tcn_residual->collect(refs);
    tcn_residual_bn->collect(refs);
  }
  attention.collect(refs);
}

}  // namespace panograph::nn
