#pragma once

#include <string>

#include "panograph/nn/layers.hpp"

namespace panograph::nn {

/// Spatial-temporal person attention. Averages the features per person (over
/// frames and that person's nodes) and per frame (over all nodes), projects the
/// C x (M + T) descriptor to C/r channels with a shared 1x1 layer and ReLU, then
/// two 1x1 heads give person and frame logits. The map
/// att[t, m] = sigmoid(frame[t]) * sigmoid(person[m]) scales every channel and
/// node of person m at frame t. forward() returns x * att (no skip).
class PersonAttention {
 public:
  PersonAttention(const std::string& prefix, std::size_t channels, std::size_t persons, std::size_t nodes_per_person,
                  std::size_t reduction);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(ParamRefs& refs);
  void fold(Signature& sig) const;

  /// Attention map [B, T, M] of the last forward call.
  const Tensor& attention_map() const { return attention_; }

  Param proj_weight;    // [C, H]
  Param proj_bias;      // [H]
  Param person_weight;  // [H]
  Param person_bias;    // [1]
  Param frame_weight;   // [H]
  Param frame_bias;     // [1]

 private:
  std::size_t channels_;
  std::size_t persons_;
  std::size_t nodes_per_person_;
  std::size_t hidden_;

  Tensor input_;
  Tensor descriptor_;  // [B, C, M + T]
  Tensor hidden_act_;  // [B, H, M + T] after ReLU
  Tensor person_score_;  // [B, M]
  Tensor frame_score_;   // [B, T]
  Tensor attention_;     // [B, T, M]
};

}  // namespace panograph::nn
