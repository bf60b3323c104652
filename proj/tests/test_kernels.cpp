#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "panograph/kernels.hpp"

namespace {

using namespace panograph::kernels;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

// Both versions accumulate into pre-filled outputs; start from the same nonzero data.
template <typename Fast, typename Slow>
void expect_identical(std::size_t out_size, Fast fast, Slow slow) {
  auto a = random_vector(out_size, 99);
  auto b = a;
  fast(a);
  slow(b);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]) << "element " << i;
}

TEST(Kernels, MixMatchesReference) {
  for (const MixDims d : {MixDims{2, 3, 5, 7}, MixDims{1, 16, 8, 288}, MixDims{3, 1, 1, 1}}) {
    const auto x = random_vector(d.batch * d.in * d.length, 1);
    const auto w = random_vector(d.in * d.out, 2);
    const auto dy = random_vector(d.batch * d.out * d.length, 3);
    expect_identical(
        d.batch * d.out * d.length, [&](auto& y) { mix_forward(d, x, w, y); },
        [&](auto& y) { reference::mix_forward(d, x, w, y); });
    expect_identical(
        d.batch * d.in * d.length, [&](auto& dx) { mix_backward_input(d, dy, w, dx); },
        [&](auto& dx) { reference::mix_backward_input(d, dy, w, dx); });
    expect_identical(
        d.in * d.out, [&](auto& dw) { mix_backward_weight(d, x, dy, dw); },
        [&](auto& dw) { reference::mix_backward_weight(d, x, dy, dw); });
  }
}

TEST(Kernels, AggregateMatchesReference) {
  for (const AggregateDims d : {AggregateDims{5, 4}, AggregateDims{64, 18}, AggregateDims{1, 1}}) {
    const auto z = random_vector(d.rows * d.nodes, 4);
    const auto g = random_vector(d.nodes * d.nodes, 5);
    const auto dy = random_vector(d.rows * d.nodes, 6);
    expect_identical(
        d.rows * d.nodes, [&](auto& y) { aggregate_forward(d, z, g, y); },
        [&](auto& y) { reference::aggregate_forward(d, z, g, y); });
    expect_identical(
        d.rows * d.nodes, [&](auto& dz) { aggregate_backward_input(d, dy, g, dz); },
        [&](auto& dz) { reference::aggregate_backward_input(d, dy, g, dz); });
    expect_identical(
        d.nodes * d.nodes, [&](auto& dg) { aggregate_backward_matrix(d, dy, z, dg); },
        [&](auto& dg) { reference::aggregate_backward_matrix(d, dy, z, dg); });
  }
}

TEST(Kernels, TemporalMatchesReference) {
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t dilation : {1u, 2u}) {
      const TemporalDims d{2, 3, 4, 9, 5, 3, dilation, stride};
      const auto x = random_vector(d.batch * d.in * d.time * d.nodes, 7);
      const auto w = random_vector(d.out * d.in * d.taps, 8);
      const auto dy = random_vector(d.batch * d.out * d.out_time() * d.nodes, 9);
      expect_identical(
          d.batch * d.out * d.out_time() * d.nodes, [&](auto& y) { temporal_forward(d, x, w, y); },
          [&](auto& y) { reference::temporal_forward(d, x, w, y); });
      expect_identical(
          d.batch * d.in * d.time * d.nodes, [&](auto& dx) { temporal_backward_input(d, dy, w, dx); },
          [&](auto& dx) { reference::temporal_backward_input(d, dy, w, dx); });
      expect_identical(
          d.out * d.in * d.taps, [&](auto& dw) { temporal_backward_weight(d, x, dy, dw); },
          [&](auto& dw) { reference::temporal_backward_weight(d, x, dy, dw); });
    }
  }
}

TEST(Kernels, TemporalOutputLength) {
  EXPECT_EQ((TemporalDims{1, 1, 1, 16, 1, 3, 1, 2}.out_time()), 8u);
  EXPECT_EQ((TemporalDims{1, 1, 1, 41, 1, 3, 1, 2}.out_time()), 21u);
  EXPECT_EQ((TemporalDims{1, 1, 1, 5, 1, 3, 2, 1}.pad()), 2u);
}

TEST(Kernels, TemporalIdentityTap) {
  // A centered unit tap copies the input.
  const TemporalDims d{1, 1, 1, 6, 2, 3, 1, 1};
  const auto x = random_vector(12, 10);
  const std::vector<double> w = {0.0, 1.0, 0.0};
  std::vector<double> y(12, 0.0);
  temporal_forward(d, x, w, y);
  EXPECT_EQ(y, x);
}

}  // namespace
