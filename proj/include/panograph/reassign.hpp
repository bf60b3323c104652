#pragma once

// Tracking-based pose reassignment: maps a variable number of tracked
// detections per frame onto a fixed roster of M person slots.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "panograph/tensor.hpp"

namespace panograph::reassign {

using TrackId = std::int64_t;

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
};

struct Detection {
  TrackId track_id = 0;
  double confidence = 0.0;
  double center_x = 0.0;  // bbox center, pixels
  double center_y = 0.0;
  std::vector<Keypoint> keypoints;
};

/// Object keypoint observed in a frame; copied into every person slot.
struct ObjectObservation {
  std::size_t slot = 0;
  Keypoint point;
};

struct PoseFrame {
  std::size_t frame_index = 0;
  std::vector<Detection> detections;
  std::vector<ObjectObservation> objects;
};

/// Streaming trajectory statistics of one track (Welford mean / sum of squared deviations).
struct TrackStats {
  std::size_t length = 0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double m2_x = 0.0;
  double m2_y = 0.0;

  void observe(double x, double y);
};

class TrackState {
 public:
  /// Folds the bbox centers of every detection in `frame` into the per-track statistics.
  void observe(const PoseFrame& frame);
  const TrackStats& stats(TrackId id) const;
  bool contains(TrackId id) const { return tracks_.count(id) != 0; }
  std::size_t size() const { return tracks_.size(); }

 private:
  std::map<TrackId, TrackStats> tracks_;
};

/// Population std of x plus population std of y over the trajectory.
double trajectory_spread(const TrackStats& stats);

/// Softmax of the spreads with max-subtraction.
std::vector<double> activeness(std::span<const double> spreads);

enum class ScoreMode { ConfidenceActiveness, ConfidenceOnly };

struct Candidate {
  TrackId track_id;
  double score;
};

struct RosterAssignment {
  std::vector<std::optional<TrackId>> slots;  // slot -> track
  std::vector<TrackId> dropped;               // detected but not selected

  std::size_t assigned() const;
  std::optional<std::size_t> slot_of(TrackId id) const;
};

/// Top-M selection (ties -> smaller id), then id mod M placement with
/// conflicts won by the smaller id, then leftovers to free slots in order.
RosterAssignment assign_roster(std::span<const Candidate> candidates, std::size_t slots);

/// Scores one frame's detections and assigns them. `state` must already include this frame.
RosterAssignment reassign_frame(const PoseFrame& frame, const TrackState& state, std::size_t slots,
                                ScoreMode mode = ScoreMode::ConfidenceActiveness);

struct SequenceReport {
  std::vector<double> slot_mean_track_len;
  std::vector<std::size_t> dropped_per_frame;
  double mean_track_len = 0.0;  // assigned slot-frames per contiguous run, over all slots
};

struct AssembledSequence {
  Tensor skeleton;  // [T, M, V + n, 3] with channels (x, y, visibility)
  std::vector<RosterAssignment> assignments;
  SequenceReport report;
};

/// Contiguous same-track runs per slot. Absent frames break runs.
SequenceReport track_length_report(std::span<const RosterAssignment> assignments, std::size_t slots);

/// Runs reassignment over a clip. Frames must be ordered by frame_index; `frames_total`
/// fixes T (0 means max frame_index + 1). Absent slots are zero-filled.
AssembledSequence assemble_sequence(std::span<const PoseFrame> frames, std::size_t slots, std::size_t joints,
                                    std::size_t objects, std::size_t frames_total = 0,
                                    ScoreMode mode = ScoreMode::ConfidenceActiveness);

}  // namespace panograph::reassign
