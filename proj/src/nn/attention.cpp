#include "panograph/nn/attention.hpp"

#include <algorithm>
#include <cmath>

#include "panograph/errors.hpp"

namespace panograph::nn {

namespace {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

PersonAttention::PersonAttention(const std::string& prefix, std::size_t channels, std::size_t persons,
                                 std::size_t nodes_per_person, std::size_t reduction)
    : proj_weight(prefix + ".proj.weight", {channels, std::max<std::size_t>(1, channels / reduction)}, Init::Kaiming,
                  channels),
      proj_bias(prefix + ".proj.bias", {std::max<std::size_t>(1, channels / reduction)}, Init::Zeros),
      person_weight(prefix + ".person.weight", {std::max<std::size_t>(1, channels / reduction)}, Init::Kaiming,
                    std::max<std::size_t>(1, channels / reduction)),
      person_bias(prefix + ".person.bias", {1}, Init::Zeros),
      frame_weight(prefix + ".frame.weight", {std::max<std::size_t>(1, channels / reduction)}, Init::Kaiming,
                   std::max<std::size_t>(1, channels / reduction)),
      frame_bias(prefix + ".frame.bias", {1}, Init::Zeros),
      channels_(channels),
      persons_(persons),
      nodes_per_person_(nodes_per_person),
      hidden_(std::max<std::size_t>(1, channels / reduction)) {
  if (reduction == 0) throw ConfigError("attention reduction must be positive");
}

Tensor PersonAttention::forward(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != channels_ || x.dim(3) != persons_ * nodes_per_person_) {
    throw ContractError("attention: expected [B, " + std::to_string(channels_) + ", T, " +
                        std::to_string(persons_ * nodes_per_person_) + "], got " + shape_string(x.shape()));
  }
  const std::size_t B = x.dim(0), C = channels_, T = x.dim(2), M = persons_, J = nodes_per_person_;
  const std::size_t N = M * J, D = M + T, H = hidden_;
  input_ = x;

  descriptor_ = Tensor({B, C, D});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const double* xc = x.data() + (b * C + c) * T * N;
      double* desc = descriptor_.data() + (b * C + c) * D;
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t j = 0; j < J; ++j) {
            const double v = xc[t * N + m * J + j];
            desc[m] += v;
            desc[M + t] += v;
          }
      for (std::size_t m = 0; m < M; ++m) desc[m] /= static_cast<double>(T * J);
      for (std::size_t t = 0; t < T; ++t) desc[M + t] /= static_cast<double>(N);
    }

  hidden_act_ = Tensor({B, H, D});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t l = 0; l < D; ++l) {
        double s = proj_bias.value[h];
        for (std::size_t c = 0; c < C; ++c) s += proj_weight.value[c * H + h] * descriptor_[(b * C + c) * D + l];
        hidden_act_[(b * H + h) * D + l] = std::max(0.0, s);
      }

  person_score_ = Tensor({B, M});
  frame_score_ = Tensor({B, T});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t m = 0; m < M; ++m) {
      double s = person_bias.value[0];
      for (std::size_t h = 0; h < H; ++h) s += person_weight.value[h] * hidden_act_[(b * H + h) * D + m];
      person_score_[b * M + m] = sigmoid(s);
    }
    for (std::size_t t = 0; t < T; ++t) {
      double s = frame_bias.value[0];
      for (std::size_t h = 0; h < H; ++h) s += frame_weight.value[h] * hidden_act_[(b * H + h) * D + M + t];
      frame_score_[b * T + t] = sigmoid(s);
    }
  }

  attention_ = Tensor({B, T, M});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t m = 0; m < M; ++m) attention_[(b * T + t) * M + m] = frame_score_[b * T + t] * person_score_[b * M + m];

  Tensor y(x.shape());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t m = 0; m < M; ++m) {
          const double a = attention_[(b * T + t) * M + m];
          const std::size_t base = ((b * C + c) * T + t) * N + m * J;
          for (std::size_t j = 0; j < J; ++j) y[base + j] = x[base + j] * a;
        }
  return y;
}

Tensor PersonAttention::backward(const Tensor& dy) {
  require_shape(dy, input_.shape(), "attention backward");
  const std::size_t B = input_.dim(0), C = channels_, T = input_.dim(2), M = persons_, J = nodes_per_person_;
  const std::size_t N = M * J, D = M + T, H = hidden_;
  const Tensor& x = input_;

  Tensor dx(x.shape());
  Tensor datt({B, T, M});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t m = 0; m < M; ++m) {
          const double a = attention_[(b * T + t) * M + m];
          const std::size_t base = ((b * C + c) * T + t) * N + m * J;
          double s = 0.0;
          for (std::size_t j = 0; j < J; ++j) {
            dx[base + j] = dy[base + j] * a;
            s += dy[base + j] * x[base + j];
          }
          datt[(b * T + t) * M + m] += s;
        }

  // Gradients of the pre-sigmoid logits.
  Tensor dperson({B, M});
  Tensor dframe({B, T});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t m = 0; m < M; ++m) {
      double s = 0.0;
      for (std::size_t t = 0; t < T; ++t) s += datt[(b * T + t) * M + m] * frame_score_[b * T + t];
      const double p = person_score_[b * M + m];
      dperson[b * M + m] = s * p * (1.0 - p);
    }
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t m = 0; m < M; ++m) s += datt[(b * T + t) * M + m] * person_score_[b * M + m];
      const double f = frame_score_[b * T + t];
      dframe[b * T + t] = s * f * (1.0 - f);
    }
  }

  Tensor dpre({B, H, D});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t m = 0; m < M; ++m) {
      const double g = dperson[b * M + m];
      person_bias.grad[0] += g;
      for (std::size_t h = 0; h < H; ++h) {
        const double act = hidden_act_[(b * H + h) * D + m];
        person_weight.grad[h] += g * act;
        if (act > 0.0) dpre[(b * H + h) * D + m] = g * person_weight.value[h];
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      const double g = dframe[b * T + t];
      frame_bias.grad[0] += g;
      for (std::size_t h = 0; h < H; ++h) {
        const double act = hidden_act_[(b * H + h) * D + M + t];
        frame_weight.grad[h] += g * act;
        if (act > 0.0) dpre[(b * H + h) * D + M + t] = g * frame_weight.value[h];
      }
    }
  }

  Tensor ddesc({B, C, D});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t l = 0; l < D; ++l) {
        const double g = dpre[(b * H + h) * D + l];
        if (g == 0.0) continue;
        proj_bias.grad[h] += g;
        for (std::size_t c = 0; c < C; ++c) {
          proj_weight.grad[c * H + h] += g * descriptor_[(b * C + c) * D + l];
          ddesc[(b * C + c) * D + l] += g * proj_weight.value[c * H + h];
        }
      }

  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const double* dd = ddesc.data() + (b * C + c) * D;
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t m = 0; m < M; ++m) {
          const double share = dd[m] / static_cast<double>(T * J) + dd[M + t] / static_cast<double>(N);
          const std::size_t base = ((b * C + c) * T + t) * N + m * J;
          for (std::size_t j = 0; j < J; ++j) dx[base + j] += share;
        }
    }
  return dx;
}

void PersonAttention::fold(Signature& sig) const {
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < hidden_act_.size(); ++i) {
    word = (word << 1) | (hidden_act_[i] > 0.0 ? 1u : 0u);
    if (i % 64 == 63) sig.fold(word);
  }
  sig.fold(word);
}

void PersonAttention::collect(ParamRefs& refs) {
  refs.params.push_back(&proj_weight);
  refs.params.push_back(&proj_bias);
  refs.params.push_back(&person_weight);
  refs.params.push_back(&person_bias);
  refs.params.push_back(&frame_weight);
  refs.params.push_back(&frame_bias);
}

}  // namespace panograph::nn
