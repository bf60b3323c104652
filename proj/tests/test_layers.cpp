#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "panograph/errors.hpp"
#include "panograph/gradcheck.hpp"
#include "panograph/nn/attention.hpp"
#include "panograph/nn/layers.hpp"
#include "panograph/nn/loss.hpp"
#include "panograph/nn/tcn.hpp"

namespace {

using namespace panograph;
using namespace panograph::nn;

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

void init_all(ParamRefs& refs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (Param* p : refs.params) p->initialize(rng);
}

TEST(Loss, UniformLogitsGiveLogK) {
  const Tensor logits({3, 8}, 0.25);
  const std::vector<std::size_t> labels = {0, 5, 7};
  const auto r = cross_entropy(logits, labels);
  EXPECT_NEAR(r.loss, std::log(8.0), 1e-12);
  for (std::size_t b = 0; b < 3; ++b) {
    double row = 0.0;
    for (std::size_t k = 0; k < 8; ++k) row += r.grad[b * 8 + k];
    EXPECT_NEAR(row, 0.0, 1e-15);
  }
}

TEST(Loss, LargeLogitsStayFinite) {
  Tensor logits({1, 3}, std::vector<double>{1000.0, -1000.0, 0.0});
  const std::vector<std::size_t> labels = {1};
  const auto r = cross_entropy(logits, labels);
  EXPECT_NEAR(r.loss, 2000.0, 1e-9);
  EXPECT_TRUE(all_finite(r.grad.values()));
  const std::vector<std::size_t> bad = {3};
  EXPECT_THROW(cross_entropy(logits, bad), InputError);
}

TEST(Layers, KaimingBound) {
  Param p("w", {400, 50}, Init::Kaiming, 400);
  std::mt19937_64 rng(1);
  p.initialize(rng);
  const double bound = std::sqrt(6.0 / 400.0);
  double lo = 0.0, hi = 0.0;
  for (double v : p.value.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, -bound);
  EXPECT_LE(hi, bound);
  EXPECT_GT(hi, 0.9 * bound);
}

TEST(Layers, BatchNormTrainAndEval) {
  BatchNorm bn("bn", 3);
  ParamRefs refs;
  bn.collect(refs);
  init_all(refs, 1);
  const Tensor x = random_tensor({4, 3, 5, 2}, 2, 3.0);
  const Tensor y = bn.forward(x, Mode::Train);
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t i = 0; i < 10; ++i) {
        const double v = y[(b * 3 + c) * 10 + i];
        sum += v;
        sq += v * v;
      }
    EXPECT_NEAR(sum / 40.0, 0.0, 1e-12);
    EXPECT_NEAR(sq / 40.0, 1.0, 1e-4);
  }
  // One update with momentum 0.9 from (0, 1).
  double mean0 = 0.0;
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < 10; ++i) mean0 += x[(b * 3) * 10 + i];
  mean0 /= 40.0;
  EXPECT_NEAR(bn.running_mean.value[0], 0.1 * mean0, 1e-12);
  const Tensor e = bn.forward(x, Mode::Eval);
  EXPECT_EQ(e.shape(), x.shape());
  EXPECT_GT(max_abs_diff(e, y), 0.1);
}

TEST(Layers, Conv1x1Stride) {
  Conv1x1 conv("c", 2, 3, 2);
  ParamRefs refs;
  conv.collect(refs);
  init_all(refs, 3);
  const Tensor y = conv.forward(random_tensor({1, 2, 5, 4}, 4));
  EXPECT_EQ(y.shape(), (Shape{1, 3, 3, 4}));
}

TEST(Layers, MaxPoolPicksWindowMaximum) {
  TemporalMaxPool pool(1);
  Tensor x({1, 1, 4, 1}, std::vector<double>{1.0, 5.0, 2.0, 0.0});
  const Tensor y = pool.forward(x);
  EXPECT_EQ(y.storage(), (std::vector<double>{5.0, 5.0, 5.0, 2.0}));
  const Tensor dx = pool.backward(Tensor({1, 1, 4, 1}, 1.0));
  EXPECT_EQ(dx.storage(), (std::vector<double>{0.0, 3.0, 1.0, 0.0}));
}

TEST(Layers, TcnBranchesConcatenate) {
  MultiScaleTcn tcn("tcn", 8, 8, 2);
  ParamRefs refs;
  tcn.collect(refs);
  init_all(refs, 5);
  const Tensor x = random_tensor({2, 8, 6, 3}, 6);
  const Tensor y = tcn.forward(x, Mode::Eval);
  EXPECT_EQ(y.shape(), (Shape{2, 8, 3, 3}));
  for (std::size_t k = 0; k < MultiScaleTcn::kBranches; ++k) {
    const Tensor part = tcn.branch_forward(k, x, Mode::Eval);
    EXPECT_EQ(max_abs_diff(part, slice_channels(y, 2 * k, 2)), 0.0) << "branch " << k;
  }
  EXPECT_THROW(MultiScaleTcn("bad", 8, 6, 1), ConfigError);
}

TEST(Layers, AttentionMapIsBounded) {
  PersonAttention att("att", 8, 3, 4, 4);
  ParamRefs refs;
  att.collect(refs);
  init_all(refs, 7);
  const Tensor x = random_tensor({2, 8, 5, 12}, 8, 10.0);
  const Tensor y = att.forward(x);
  const Tensor& map = att.attention_map();
  EXPECT_EQ(map.shape(), (Shape{2, 5, 3}));
  for (double a : map.values()) {
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
  }
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_LE(std::abs(y[i]), std::abs(x[i]));
}

TEST(Layers, ChannelHelpers) {
  const Tensor a = random_tensor({2, 3, 2, 2}, 9), b = random_tensor({2, 1, 2, 2}, 10);
  const Tensor ab = concat_channels({&a, &b});
  EXPECT_EQ(ab.shape(), (Shape{2, 4, 2, 2}));
  EXPECT_EQ(max_abs_diff(slice_channels(ab, 0, 3), a), 0.0);
  EXPECT_EQ(max_abs_diff(slice_channels(ab, 3, 1), b), 0.0);
}

TEST(GradCheck, RelativeErrorFloor) {
  EXPECT_NEAR(gradcheck::relative_error(1.0, 1.1, 1e-4), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(gradcheck::relative_error(0.0, 1e-9, 1e-4), 1e-5);
}

TEST(GradCheck, SuiteSingleSeed) {
  const auto reports = gradcheck::run_suite(11);
  ASSERT_FALSE(reports.empty());
  bool saw_model = false;
  for (const auto& r : reports) {
    EXPECT_LT(r.max_rel_error, 1e-4) << r.name;
    EXPECT_GT(r.checked, 0u) << r.name;
    saw_model |= r.name == "model";
  }
  EXPECT_TRUE(saw_model);
}

}  // namespace
