#pragma once

// Synthetic group-motion clips. Persons stand on a line and oscillate; the
// class fixes the oscillation axis, whether neighbours move in phase or in
// anti-phase, the direction the ball travels along the line and (beyond 8
// classes) the oscillation frequency. noise_std = 0 disables every per-sample
// variation, so all samples of one class coincide.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "panograph/graph.hpp"
#include "panograph/reassign.hpp"
#include "panograph/tensor.hpp"

namespace panograph::io {

/// Corruptions applied to the emitted detection stream (not to the ground truth).
struct DetectionNoise {
  double dropout_rate = 0.03;  // per player and frame
  double switch_rate = 0.02;   // per player and frame: the player continues under a fresh track id
  std::size_t distractors = 2;  // static bystanders
  double player_conf_min = 0.7;
  double player_conf_max = 1.0;
  double distractor_conf_min = 0.05;
  double distractor_conf_max = 0.35;

  /// Bystanders as confident as the players.
  static DetectionNoise overlapping();
};

struct SyntheticSpec {
  std::size_t num_classes = 8;
  std::size_t samples_per_class = 8;
  std::size_t persons = 3;
  std::size_t joints = 5;
  std::size_t objects = 1;
  std::size_t frames = 16;
  double noise_std = 1.0;  // pixels
  std::uint64_t seed = 0;
  DetectionNoise detections;

  std::size_t sample_count() const { return num_classes * samples_per_class; }
  /// Throws ConfigError unless every count is >= 1 (objects may be 0) and noise_std >= 0.
  void validate() const;
};

struct SyntheticSample {
  std::size_t index = 0;
  std::size_t label = 0;
  Tensor skeleton;  // [T, M, V + n, 3], slot m = person m
  std::vector<reassign::PoseFrame> detections;
  std::vector<bool> clean_frames;  // every player detected, no identity switch
};

/// Chain body of `joints` joints with every object attached to the last joint.
graph::BodyTopology synthetic_body(const SyntheticSpec& spec);
std::vector<graph::ObjectAttachment> synthetic_attachments(const SyntheticSpec& spec);

/// Sample `index` has label index / samples_per_class and depends only on (spec, index).
SyntheticSample generate_sample(const SyntheticSpec& spec, std::size_t index);
std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec);

/// SplitMix64 finalizer, used for seeding and the train / validation split.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace panograph::io
