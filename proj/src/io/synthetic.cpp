#include "panograph/io/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "panograph/errors.hpp"

namespace panograph::io {

namespace {

constexpr double kSpacing = 80.0;     // px between persons
constexpr double kLimb = 15.0;        // px between chain joints
constexpr double kAmplitude = 12.0;   // px
constexpr double kBallArc = 25.0;     // px

struct Template {
  bool vertical;
  bool anti_phase;
  bool reverse_ball;
  double cycles;
};

Template class_template(std::size_t label) {
  return {(label & 1u) != 0, (label & 2u) != 0, (label & 4u) != 0, 1.0 + static_cast<double>(label >> 3)};
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

DetectionNoise DetectionNoise::overlapping() {
  DetectionNoise n;
  n.dropout_rate = 0.05;
  n.switch_rate = 0.03;
  n.distractors = 3;
  n.player_conf_min = 0.5;
  n.player_conf_max = 0.95;
  n.distractor_conf_min = 0.55;
  n.distractor_conf_max = 1.0;
  return n;
}

void SyntheticSpec::validate() const {
  if (num_classes == 0 || samples_per_class == 0 || persons == 0 || joints == 0 || frames == 0) {
    throw ConfigError("synthetic counts must be at least 1");
  }
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  const auto& d = detections;
  if (d.dropout_rate < 0.0 || d.dropout_rate > 1.0 || d.switch_rate < 0.0 || d.switch_rate > 1.0) {
    throw ConfigError("dropout and switch rates must lie in [0, 1]");
  }
  if (d.player_conf_min > d.player_conf_max || d.distractor_conf_min > d.distractor_conf_max) {
    throw ConfigError("confidence ranges must be ordered");
  }
}

std::vector<graph::ObjectAttachment> synthetic_attachments(const SyntheticSpec& spec) {
  std::vector<graph::ObjectAttachment> out;
  for (std::size_t s = 0; s < spec.objects; ++s) out.push_back({s, spec.joints - 1});
  return out;
}

graph::BodyTopology synthetic_body(const SyntheticSpec& spec) {
  auto body = graph::make_body(graph::Layout::Chain, spec.joints);
  if (spec.objects == 0) return body;
  return graph::attach_objects(std::move(body), spec.objects, synthetic_attachments(spec));
}

SyntheticSample generate_sample(const SyntheticSpec& spec, std::size_t index) {
  spec.validate();
  if (index >= spec.sample_count()) throw ContractError("synthetic sample index out of range");
  const std::size_t T = spec.frames, M = spec.persons, V = spec.joints, n = spec.objects, N = V + n;
  std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(index)));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticSample out;
  out.index = index;
  out.label = index / spec.samples_per_class;
  const Template tpl = class_template(out.label);
  const bool varied = spec.noise_std > 0.0;
  const double sigma = spec.noise_std;

  const double phase0 = varied ? 2.0 * std::numbers::pi * unit(rng) : 0.0;
  std::vector<double> base_x(M), base_y(M);
  for (std::size_t m = 0; m < M; ++m) {
    base_x[m] = 100.0 + kSpacing * static_cast<double>(m) + 4.0 * sigma * gauss(rng);
    base_y[m] = 300.0 + 4.0 * sigma * gauss(rng);
  }

  out.skeleton = Tensor({T, M, N, 3});
  auto at = [&](std::size_t t, std::size_t m, std::size_t j) { return ((t * M + m) * N + j) * 3; };
  const double omega = 2.0 * std::numbers::pi * tpl.cycles / static_cast<double>(T);
  std::vector<double> hand_x(T * M), hand_y(T * M);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t m = 0; m < M; ++m) {
      const double phase = phase0 + (tpl.anti_phase && m % 2 == 1 ? std::numbers::pi : 0.0);
      for (std::size_t j = 0; j < V; ++j) {
        const double swing = kAmplitude * (1.0 + 0.1 * static_cast<double>(j)) *
                             std::sin(omega * static_cast<double>(t) + phase);
        const double x = base_x[m] + (tpl.vertical ? 0.0 : swing);
        const double y = base_y[m] - kLimb * static_cast<double>(j) + (tpl.vertical ? swing : 0.0);
        const std::size_t k = at(t, m, j);
        out.skeleton[k] = x;
        out.skeleton[k + 1] = y;
        out.skeleton[k + 2] = 1.0;
        if (j == V - 1) {
          hand_x[t * M + m] = x;
          hand_y[t * M + m] = y;
        }
      }
    }
  }
  // Ball travels between the outer persons' hands; further objects sit at the group center.
  const std::size_t from = tpl.reverse_ball ? M - 1 : 0;
  const std::size_t to = tpl.reverse_ball ? 0 : M - 1;
  for (std::size_t t = 0; t < T; ++t) {
    const double u = T > 1 ? static_cast<double>(t) / static_cast<double>(T - 1) : 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double x, y;
      if (s == 0) {
        x = hand_x[t * M + from] + (hand_x[t * M + to] - hand_x[t * M + from]) * u;
        y = hand_y[t * M + from] + (hand_y[t * M + to] - hand_y[t * M + from]) * u - kBallArc * 4.0 * u * (1.0 - u);
      } else {
        x = 100.0 + kSpacing * static_cast<double>(M - 1) / 2.0;
        y = 300.0 - kLimb * static_cast<double>(V) - 10.0 * static_cast<double>(s);
      }
      for (std::size_t m = 0; m < M; ++m) {
        const std::size_t k = at(t, m, V + s);
        out.skeleton[k] = x;
        out.skeleton[k + 1] = y;
        out.skeleton[k + 2] = 1.0;
      }
    }
  }
  if (varied) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t j = 0; j < V; ++j) {
          out.skeleton[at(t, m, j)] += sigma * gauss(rng);
          out.skeleton[at(t, m, j) + 1] += sigma * gauss(rng);
        }
      for (std::size_t s = 0; s < n; ++s) {
        const double dx = sigma * gauss(rng), dy = sigma * gauss(rng);
        for (std::size_t m = 0; m < M; ++m) {
          out.skeleton[at(t, m, V + s)] += dx;
          out.skeleton[at(t, m, V + s) + 1] += dy;
        }
      }
    }
  }

  // Detection stream. Player m starts as track M + m; every fresh id keeps the residue m mod M.
  const DetectionNoise& noise = spec.detections;
  std::vector<reassign::TrackId> track(M);
  for (std::size_t m = 0; m < M; ++m) track[m] = static_cast<reassign::TrackId>(M + m);
  reassign::TrackId next_generation = 2;
  auto conf = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::vector<std::vector<reassign::Keypoint>> bystanders(noise.distractors);
  for (std::size_t d = 0; d < noise.distractors; ++d) {
    const double bx = 60.0 + kSpacing * static_cast<double>(d) + 25.0, by = 150.0;
    for (std::size_t j = 0; j < V; ++j) bystanders[d].push_back({bx, by - kLimb * static_cast<double>(j), 1.0});
  }

  out.clean_frames.assign(T, true);
  for (std::size_t t = 0; t < T; ++t) {
    reassign::PoseFrame frame;
    frame.frame_index = t;
    for (std::size_t m = 0; m < M; ++m) {
      if (t > 0 && unit(rng) < noise.switch_rate) {
        track[m] = next_generation++ * static_cast<reassign::TrackId>(M) + static_cast<reassign::TrackId>(m);
        out.clean_frames[t] = false;
      }
      if (unit(rng) < noise.dropout_rate) {
        out.clean_frames[t] = false;
        continue;
      }
      reassign::Detection det;
      det.track_id = track[m];
      det.confidence = conf(noise.player_conf_min, noise.player_conf_max);
      for (std::size_t j = 0; j < V; ++j) {
        const std::size_t k = at(t, m, j);
        det.keypoints.push_back({out.skeleton[k], out.skeleton[k + 1], out.skeleton[k + 2]});
        det.center_x += out.skeleton[k] / static_cast<double>(V);
        det.center_y += out.skeleton[k + 1] / static_cast<double>(V);
      }
      frame.detections.push_back(std::move(det));
    }
    for (std::size_t d = 0; d < noise.distractors; ++d) {
      reassign::Detection det;
      det.track_id = static_cast<reassign::TrackId>(1000 * M + d);
      det.confidence = conf(noise.distractor_conf_min, noise.distractor_conf_max);
      det.keypoints = bystanders[d];
      for (const auto& k : det.keypoints) {
        det.center_x += k.x / static_cast<double>(V);
        det.center_y += k.y / static_cast<double>(V);
      }
      frame.detections.push_back(std::move(det));
    }
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t k = at(t, 0, V + s);
      frame.objects.push_back({s, {out.skeleton[k], out.skeleton[k + 1], out.skeleton[k + 2]}});
    }
    out.detections.push_back(std::move(frame));
  }
  return out;
}

std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<SyntheticSample> out;
  out.reserve(spec.sample_count());
  for (std::size_t i = 0; i < spec.sample_count(); ++i) out.push_back(generate_sample(spec, i));
  return out;
}

}  // namespace panograph::io
