#pragma once

// On-disk dataset layout:
//
//   <dir>/manifest.json
//   <dir>/<id>.pgt                 ground-truth skeleton [T, M, V+n, 3] + label
//   <dir>/detections/<id>.jsonl    pose detection stream
//   <dir>/reassigned/<id>.pgt      skeleton recovered by reassignment
//   <dir>/reassigned/<id>.json     track-length report
//   <dir>/features/<id>.pgt        the four feature streams + label

#include <filesystem>
#include <string>
#include <vector>

#include "panograph/features.hpp"
#include "panograph/graph.hpp"
#include "panograph/io/synthetic.hpp"
#include "panograph/reassign.hpp"
#include "panograph/train.hpp"

namespace panograph::io {

struct SampleRecord {
  std::string id;
  std::size_t label = 0;
  bool validation = false;
};

struct Manifest {
  std::size_t num_classes = 0;
  std::size_t persons = 0;
  std::size_t joints = 0;
  std::size_t objects = 0;
  std::size_t frames = 0;
  graph::Layout layout = graph::Layout::Chain;
  std::vector<graph::ObjectAttachment> attachments;
  std::vector<SampleRecord> samples;

  graph::BodyTopology body() const;
};

/// Deterministic 80/20 split keyed by the sample index.
bool is_validation(std::size_t index);

std::string sample_id(std::size_t index);

Manifest read_manifest(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const Manifest& manifest);

/// Writes manifest, ground-truth samples and detection streams.
Manifest write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSpec& spec);

struct LabeledSkeleton {
  Tensor skeleton;
  std::size_t label = 0;
};

void save_skeleton(const std::filesystem::path& path, const Tensor& skeleton, std::size_t label);
LabeledSkeleton load_skeleton(const std::filesystem::path& path);

void save_features(const std::filesystem::path& path, const features::FeatureBundle& bundle, std::size_t label);
train::Sample load_features(const std::filesystem::path& path);

std::string format_report(const reassign::SequenceReport& report);

enum class Split { Train, Validation, All };
Split parse_split(const std::string& name);

/// Loads cached features of every manifest sample in `split`.
std::vector<train::Sample> load_feature_split(const std::filesystem::path& dir, const Manifest& manifest, Split split);

}  // namespace panograph::io
