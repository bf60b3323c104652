#include "panograph/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "panograph/errors.hpp"

namespace panograph::features {

namespace {

struct Dims {
  std::size_t T, M, N, C;
};

Dims check_skeleton(const Tensor& x, const graph::BodyTopology& body) {
  if (x.rank() != 4) throw ContractError("skeleton tensor must be [T, M, N', C], got " + shape_string(x.shape()));
  const Dims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
  if (d.N != body.nodes()) {
    throw ContractError("skeleton has " + std::to_string(d.N) + " nodes per person, topology has " +
                        std::to_string(body.nodes()));
  }
  if (d.C != 2 && d.C != 3) throw ContractError("skeleton must have 2 or 3 channels");
  if (!all_finite(x.values())) throw InputError("skeleton contains non-finite values");
  return d;
}

// [T, M, N', C] -> [T, M*N', C] view offsets coincide, so motion can run on either.
Tensor motion(const Tensor& x) {
  const std::size_t T = x.dim(0);
  const std::size_t row = x.size() / std::max<std::size_t>(T, 1);
  const std::size_t C = x.dim(x.rank() - 1);
  const std::size_t points = row / C;
  Tensor out({T, points, 2 * C});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t p = 0; p < points; ++p) {
      for (std::size_t c = 0; c < C; ++c) {
        const double here = x[(t * points + p) * C + c];
        double one = 0.0;
        double two = 0.0;
        if (t + 1 < T) one = x[((t + 1) * points + p) * C + c] - here;
        if (t + 2 < T) two = x[((t + 2) * points + p) * C + c] - here;
        out[(t * points + p) * 2 * C + c] = one;
        out[(t * points + p) * 2 * C + C + c] = two;
      }
    }
  }
  return out;
}

}  // namespace

std::string to_string(Stream s) {
  switch (s) {
    case Stream::Joint: return "joint";
    case Stream::Bone: return "bone";
    case Stream::JointMotion: return "joint_motion";
    case Stream::BoneMotion: return "bone_motion";
  }
  return "joint";
}

Stream parse_stream(std::string_view name) {
  for (std::size_t i = 0; i < kStreamCount; ++i) {
    const auto s = static_cast<Stream>(i);
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown stream '" + std::string(name) + "'");
}

Tensor select_channels(const Tensor& skeleton, std::size_t channels) {
  if (skeleton.rank() != 4) throw ContractError("skeleton tensor must be rank 4");
  const std::size_t C = skeleton.dim(3);
  if (channels == 0 || channels > C) {
    throw ConfigError("cannot select " + std::to_string(channels) + " of " + std::to_string(C) + " channels");
  }
  Tensor out({skeleton.dim(0), skeleton.dim(1), skeleton.dim(2), channels});
  const std::size_t points = skeleton.size() / C;
  for (std::size_t p = 0; p < points; ++p)
    for (std::size_t c = 0; c < channels; ++c) out[p * channels + c] = skeleton[p * C + c];
  return out;
}

Tensor body_centers(const Tensor& skeleton, const graph::BodyTopology& body) {
  const Dims d = check_skeleton(skeleton, body);
  if (body.centers.empty()) throw ConfigError("body topology has no center joints");
  Tensor centers({d.T, d.M, d.C});
  const double inv = 1.0 / static_cast<double>(body.centers.size());
  for (std::size_t t = 0; t < d.T; ++t)
    for (std::size_t m = 0; m < d.M; ++m)
      for (std::size_t c = 0; c < d.C; ++c) {
        double s = 0.0;
        for (std::size_t j : body.centers) s += skeleton[((t * d.M + m) * d.N + j) * d.C + c];
        centers[(t * d.M + m) * d.C + c] = s * inv;
      }
  return centers;
}

Tensor joint_stream(const Tensor& skeleton, const graph::BodyTopology& body) {
  const Dims d = check_skeleton(skeleton, body);
  const Tensor centers = body_centers(skeleton, body);
  Tensor out({d.T, d.M * d.N, 2 * d.C});
  for (std::size_t t = 0; t < d.T; ++t)
    for (std::size_t m = 0; m < d.M; ++m)
      for (std::size_t i = 0; i < d.N; ++i)
        for (std::size_t c = 0; c < d.C; ++c) {
          const double v = skeleton[((t * d.M + m) * d.N + i) * d.C + c];
          const std::size_t base = (t * d.M * d.N + m * d.N + i) * 2 * d.C;
          out[base + c] = v;
          // Visibility is not a coordinate and is copied unshifted.
          out[base + d.C + c] = c < 2 ? v - centers[(t * d.M + m) * d.C + c] : v;
        }
  return out;
}

Tensor bone_vectors(const Tensor& skeleton, const graph::BodyTopology& body) {
  const Dims d = check_skeleton(skeleton, body);
  const auto parent = graph::bone_parents(body);
  Tensor out({d.T, d.M, d.N, d.C});
  for (std::size_t t = 0; t < d.T; ++t)
    for (std::size_t m = 0; m < d.M; ++m)
      for (std::size_t i = 0; i < d.N; ++i)
        for (std::size_t c = 0; c < d.C; ++c) {
          const double v = skeleton[((t * d.M + m) * d.N + i) * d.C + c];
          const double p = skeleton[((t * d.M + m) * d.N + parent[i]) * d.C + c];
          out[((t * d.M + m) * d.N + i) * d.C + c] = c < 2 ? v - p : v;
        }
  return out;
}

Tensor bone_stream(const Tensor& skeleton, const graph::BodyTopology& body) {
  const Tensor bones = bone_vectors(skeleton, body);
  const std::size_t C = skeleton.dim(3);
  const std::size_t points = bones.size() / C;
  Tensor out({skeleton.dim(0), skeleton.dim(1) * skeleton.dim(2), 2 * C});
  constexpr double kRightAngle = std::numbers::pi / 2.0;
  for (std::size_t p = 0; p < points; ++p) {
    const double bx = bones[p * C + 0];
    const double by = bones[p * C + 1];
    const double norm = std::sqrt(bx * bx + by * by);
    for (std::size_t c = 0; c < C; ++c) out[p * 2 * C + c] = bones[p * C + c];
    for (std::size_t c = 0; c < C; ++c) {
      double angle = kRightAngle;
      if (c < 2 && norm > 0.0) angle = std::acos(std::clamp(bones[p * C + c] / norm, -1.0, 1.0));
      out[p * 2 * C + C + c] = angle;
    }
  }
  return out;
}

Tensor joint_motion_stream(const Tensor& skeleton) {
  if (skeleton.rank() != 4) throw ContractError("skeleton tensor must be [T, M, N', C]");
  return motion(skeleton);
}

Tensor bone_motion_stream(const Tensor& skeleton, const graph::BodyTopology& body) {
  return motion(bone_vectors(skeleton, body));
}

FeatureBundle compute_features(const Tensor& skeleton, const graph::BodyTopology& body) {
  FeatureBundle b;
  b[Stream::Joint] = joint_stream(skeleton, body);
  b[Stream::Bone] = bone_stream(skeleton, body);
  b[Stream::JointMotion] = joint_motion_stream(skeleton);
  b[Stream::BoneMotion] = bone_motion_stream(skeleton, body);
  return b;
}

}  // namespace panograph::features
