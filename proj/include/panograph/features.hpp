#pragma once

// Four preprocessed input streams of a skeleton sequence. Input skeletons are
// [T, M, N', C] with channels (x, y) or (x, y, visibility); every stream is
// [T, M*N', 2C].

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "panograph/graph.hpp"
#include "panograph/tensor.hpp"

namespace panograph::features {

enum class Stream : std::size_t { Joint = 0, Bone = 1, JointMotion = 2, BoneMotion = 3 };
inline constexpr std::size_t kStreamCount = 4;

std::string to_string(Stream s);
Stream parse_stream(std::string_view name);

struct FeatureBundle {
  std::array<Tensor, kStreamCount> streams;

  Tensor& operator[](Stream s) { return streams[static_cast<std::size_t>(s)]; }
  const Tensor& operator[](Stream s) const { return streams[static_cast<std::size_t>(s)]; }
};

/// Keeps the first `channels` channels (2 drops visibility).
Tensor select_channels(const Tensor& skeleton, std::size_t channels);

/// Per-frame, per-person body center: mean of the center joints. [T, M, C]
Tensor body_centers(const Tensor& skeleton, const graph::BodyTopology& body);

/// Absolute coordinates concatenated with coordinates relative to the body center.
Tensor joint_stream(const Tensor& skeleton, const graph::BodyTopology& body);

/// X[i] - X[parent(i)] for x, y; visibility passes through. Shape [T, M, N', C].
Tensor bone_vectors(const Tensor& skeleton, const graph::BodyTopology& body);

/// Bone vectors concatenated with their angles to the coordinate axes.
Tensor bone_stream(const Tensor& skeleton, const graph::BodyTopology& body);

/// One-hop and two-hop frame differences, zero-padded at the tail.
Tensor joint_motion_stream(const Tensor& skeleton);
Tensor bone_motion_stream(const Tensor& skeleton, const graph::BodyTopology& body);

FeatureBundle compute_features(const Tensor& skeleton, const graph::BodyTopology& body);

}  // namespace panograph::features
