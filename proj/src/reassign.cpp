#include "panograph/reassign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "panograph/errors.hpp"

namespace panograph::reassign {

void TrackStats::observe(double x, double y) {
  ++length;
  const double n = static_cast<double>(length);
  const double dx = x - mean_x;
  const double dy = y - mean_y;
  mean_x += dx / n;
  mean_y += dy / n;
  m2_x += dx * (x - mean_x);
  m2_y += dy * (y - mean_y);
}

void TrackState::observe(const PoseFrame& frame) {
  for (const auto& d : frame.detections) tracks_[d.track_id].observe(d.center_x, d.center_y);
}

const TrackStats& TrackState::stats(TrackId id) const {
  auto it = tracks_.find(id);
  if (it == tracks_.end()) throw InputError("track " + std::to_string(id) + " has no observations");
  return it->second;
}

double trajectory_spread(const TrackStats& stats) {
  if (stats.length == 0) throw InputError("trajectory spread of an empty track");
  const double n = static_cast<double>(stats.length);
  return std::sqrt(std::max(0.0, stats.m2_x / n)) + std::sqrt(std::max(0.0, stats.m2_y / n));
}

std::vector<double> activeness(std::span<const double> spreads) {
  if (spreads.empty()) return {};
  const double top = *std::max_element(spreads.begin(), spreads.end());
  std::vector<double> out(spreads.size());
  double total = 0.0;
  for (std::size_t i = 0; i < spreads.size(); ++i) {
    out[i] = std::exp(spreads[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::size_t RosterAssignment::assigned() const {
  return static_cast<std::size_t>(std::count_if(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); }));
}

std::optional<std::size_t> RosterAssignment::slot_of(TrackId id) const {
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (slots[s] == id) return s;
  }
  return std::nullopt;
}

RosterAssignment assign_roster(std::span<const Candidate> candidates, std::size_t slots) {
  if (slots == 0) throw ConfigError("roster size M must be at least 1");
  std::vector<Candidate> ranked(candidates.begin(), candidates.end());
  std::sort(ranked.begin(), ranked.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.track_id < b.track_id;
  });

  RosterAssignment result;
  result.slots.assign(slots, std::nullopt);
  const std::size_t keep = std::min(ranked.size(), slots);
  for (std::size_t i = keep; i < ranked.size(); ++i) result.dropped.push_back(ranked[i].track_id);

  std::vector<TrackId> kept;
  for (std::size_t i = 0; i < keep; ++i) kept.push_back(ranked[i].track_id);
  std::sort(kept.begin(), kept.end());

  const auto modulus = static_cast<TrackId>(slots);
  std::vector<TrackId> deferred;
  for (TrackId id : kept) {
    const auto slot = static_cast<std::size_t>(((id % modulus) + modulus) % modulus);
    if (!result.slots[slot]) {
      result.slots[slot] = id;
    } else {
      deferred.push_back(id);
    }
  }
  std::size_t next = 0;
  for (TrackId id : deferred) {
    while (result.slots[next]) ++next;
    result.slots[next] = id;
  }
  return result;
}

RosterAssignment reassign_frame(const PoseFrame& frame, const TrackState& state, std::size_t slots, ScoreMode mode) {
  if (slots == 0) throw ConfigError("roster size M must be at least 1");
  std::set<TrackId> ids;
  std::vector<double> spreads;
  for (const auto& d : frame.detections) {
    if (!ids.insert(d.track_id).second) {
      throw InputError("frame " + std::to_string(frame.frame_index) + ": duplicate track id " +
                       std::to_string(d.track_id));
    }
    spreads.push_back(trajectory_spread(state.stats(d.track_id)));
  }
  const std::vector<double> act = activeness(spreads);
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < frame.detections.size(); ++i) {
    const auto& d = frame.detections[i];
    const double score = mode == ScoreMode::ConfidenceActiveness ? d.confidence + act[i] : d.confidence;
    candidates.push_back({d.track_id, score});
  }
  return assign_roster(candidates, slots);
}

SequenceReport track_length_report(std::span<const RosterAssignment> assignments, std::size_t slots) {
  SequenceReport report;
  report.slot_mean_track_len.assign(slots, 0.0);
  std::size_t total_frames = 0;
  std::size_t total_runs = 0;
  for (std::size_t s = 0; s < slots; ++s) {
    std::size_t runs = 0;
    std::size_t frames = 0;
    std::optional<TrackId> previous;
    for (const auto& a : assignments) {
      const auto current = s < a.slots.size() ? a.slots[s] : std::nullopt;
      if (current) {
        ++frames;
        if (current != previous) ++runs;
      }
      previous = current;
    }
    if (runs > 0) report.slot_mean_track_len[s] = static_cast<double>(frames) / static_cast<double>(runs);
    total_frames += frames;
    total_runs += runs;
  }
  for (const auto& a : assignments) report.dropped_per_frame.push_back(a.dropped.size());
  if (total_runs > 0) report.mean_track_len = static_cast<double>(total_frames) / static_cast<double>(total_runs);
  return report;
}

AssembledSequence assemble_sequence(std::span<const PoseFrame> frames, std::size_t slots, std::size_t joints,
                                    std::size_t objects, std::size_t frames_total, ScoreMode mode) {
  if (frames.empty()) throw InputError("cannot assemble a sequence from zero frames");
  if (slots == 0) throw ConfigError("roster size M must be at least 1");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].frame_index <= frames[i - 1].frame_index) {
      throw InputError("frames must be strictly ordered by frame index (frame " +
                       std::to_string(frames[i].frame_index) + ")");
    }
  }
  const std::size_t T = frames_total ? frames_total : frames.back().frame_index + 1;
  if (frames.back().frame_index >= T) {
    throw InputError("frame index " + std::to_string(frames.back().frame_index) + " exceeds clip length " +
                     std::to_string(T));
  }
  const std::size_t nodes = joints + objects;
  AssembledSequence out;
  out.skeleton = Tensor({T, slots, nodes, 3});
  out.assignments.assign(T, RosterAssignment{std::vector<std::optional<TrackId>>(slots), {}});

  auto put = [&](std::size_t t, std::size_t m, std::size_t node, const Keypoint& k) {
    const std::size_t base = ((t * slots + m) * nodes + node) * 3;
    out.skeleton[base + 0] = k.x;
    out.skeleton[base + 1] = k.y;
    out.skeleton[base + 2] = k.v;
  };

  TrackState state;
  for (const auto& frame : frames) {
    for (const auto& d : frame.detections) {
      if (d.keypoints.size() != joints) {
        throw InputError("frame " + std::to_string(frame.frame_index) + ", track " + std::to_string(d.track_id) +
                         ": expected " + std::to_string(joints) + " keypoints, got " +
                         std::to_string(d.keypoints.size()));
      }
    }
    state.observe(frame);
    const std::size_t t = frame.frame_index;
    RosterAssignment assignment = reassign_frame(frame, state, slots, mode);
    for (std::size_t m = 0; m < slots; ++m) {
      if (!assignment.slots[m]) continue;
      const TrackId id = *assignment.slots[m];
      const auto it = std::find_if(frame.detections.begin(), frame.detections.end(),
                                   [id](const Detection& d) { return d.track_id == id; });
      for (std::size_t j = 0; j < joints; ++j) put(t, m, j, it->keypoints[j]);
    }
    for (const auto& obj : frame.objects) {
      if (obj.slot >= objects) {
        throw InputError("frame " + std::to_string(t) + ": object slot " + std::to_string(obj.slot) +
                         " out of range");
      }
      for (std::size_t m = 0; m < slots; ++m) put(t, m, joints + obj.slot, obj.point);
    }
    out.assignments[t] = std::move(assignment);
  }
  out.report = track_length_report(out.assignments, slots);
  return out;
}

}  // namespace panograph::reassign
