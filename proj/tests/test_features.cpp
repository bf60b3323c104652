#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "panograph/errors.hpp"
#include "panograph/features.hpp"

namespace {

using namespace panograph;
using namespace panograph::features;

Tensor random_skeleton(std::size_t T, std::size_t M, std::size_t N, std::size_t C, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  Tensor x({T, M, N, C});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (C == 3 && i % 3 == 2) ? 0.75 : u(rng);
  return x;
}

TEST(Features, StreamShapes) {
  const auto body = graph::attach_objects(graph::make_body(graph::Layout::Chain, 4), 1, {{0, 3}});
  const auto x = random_skeleton(6, 2, 5, 3, 1);
  const auto f = compute_features(x, body);
  for (const auto& s : f.streams) EXPECT_EQ(s.shape(), (Shape{6, 10, 6}));
}

TEST(Features, JointStreamIsRelativeToCenter) {
  const auto body = graph::make_body(graph::Layout::Chain, 3);  // center joint 1
  const auto x = random_skeleton(2, 1, 3, 3, 2);
  const auto j = joint_stream(x, body);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t i = 0; i < 3; ++i) {
      const double* row = j.data() + (t * 3 + i) * 6;
      EXPECT_DOUBLE_EQ(row[0], x.at({t, 0, i, 0}));
      EXPECT_DOUBLE_EQ(row[3], x.at({t, 0, i, 0}) - x.at({t, 0, 1, 0}));
      EXPECT_DOUBLE_EQ(row[4], x.at({t, 0, i, 1}) - x.at({t, 0, 1, 1}));
      EXPECT_DOUBLE_EQ(row[5], 0.75);
    }
}

TEST(Features, BoneAnglesOfAxisAlignedBone) {
  const auto body = graph::make_body(graph::Layout::Chain, 2);
  Tensor x({1, 1, 2, 2}, {0.0, 0.0, 3.0, 0.0});
  const auto b = bone_stream(x, body);
  // Root bone is zero: both angles default to a right angle.
  EXPECT_DOUBLE_EQ(b[2], std::numbers::pi / 2);
  EXPECT_DOUBLE_EQ(b[3], std::numbers::pi / 2);
  // Joint 1 points along +x.
  EXPECT_DOUBLE_EQ(b[4 + 0], 3.0);
  EXPECT_DOUBLE_EQ(b[4 + 2], 0.0);
  EXPECT_DOUBLE_EQ(b[4 + 3], std::numbers::pi / 2);
}

TEST(Features, MotionIsZeroPaddedAtTail) {
  Tensor x({3, 1, 1, 2}, {1.0, 0.0, 4.0, 0.0, 9.0, 0.0});
  const auto m = joint_motion_stream(x);
  EXPECT_EQ(m.shape(), (Shape{3, 1, 4}));
  EXPECT_DOUBLE_EQ(m[0], 3.0);
  EXPECT_DOUBLE_EQ(m[2], 8.0);
  EXPECT_DOUBLE_EQ(m[4], 5.0);
  EXPECT_DOUBLE_EQ(m[6], 0.0);
  EXPECT_DOUBLE_EQ(m[8], 0.0);
}

TEST(Features, TranslationInvariance) {
  const auto body = graph::make_body(graph::Layout::Coco17, 17);
  auto x = random_skeleton(4, 2, 17, 2, 3);
  const auto before = compute_features(x, body);
  for (std::size_t i = 0; i < x.size(); i += 2) x[i] += 37.0;
  const auto after = compute_features(x, body);
  for (Stream s : {Stream::Bone, Stream::JointMotion, Stream::BoneMotion})
    EXPECT_LT(max_abs_diff(before[s], after[s]), 1e-9) << to_string(s);
}

TEST(Features, SelectChannels) {
  const auto x = random_skeleton(2, 1, 3, 3, 4);
  const auto y = select_channels(x, 2);
  EXPECT_EQ(y.shape(), (Shape{2, 1, 3, 2}));
  EXPECT_EQ(y[2], x[3]);
  EXPECT_THROW(select_channels(x, 4), ConfigError);
}

TEST(Features, Errors) {
  const auto body = graph::make_body(graph::Layout::Chain, 3);
  EXPECT_THROW(compute_features(random_skeleton(2, 1, 4, 3, 5), body), ContractError);
  auto x = random_skeleton(2, 1, 3, 3, 5);
  x[0] = std::nan("");
  EXPECT_THROW(compute_features(x, body), InputError);
  EXPECT_THROW(parse_stream("velocity"), ConfigError);
  EXPECT_EQ(parse_stream("bone_motion"), Stream::BoneMotion);
}

}  // namespace
