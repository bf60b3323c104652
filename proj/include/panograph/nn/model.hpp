#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <vector>

#include "panograph/features.hpp"
#include "panograph/graph.hpp"
#include "panograph/nn/block.hpp"
#include "panograph/nn/layers.hpp"

namespace panograph::nn {

struct ModelConfig {
  // Graph and data shape.
  std::size_t persons = 12;
  std::size_t joints = 17;
  std::size_t objects = 0;
  std::size_t frames = 72;
  std::size_t coord_channels = 3;  // 2: (x, y); 3: (x, y, visibility)
  std::size_t num_classes = 9;
  graph::Layout layout = graph::Layout::Coco17;
  std::vector<graph::ObjectAttachment> attachments;
  graph::InterVariant inter = graph::InterVariant::Pairwise;

  // Architecture: output channels of each block. The first input-branch block
  // reads 2C channels; the main branch reads the concatenated branch outputs.
  std::vector<std::size_t> input_channels = {64, 64, 32};
  std::vector<std::size_t> main_channels = {128, 128, 128, 256, 256, 256};
  std::set<std::size_t> stride_blocks = {3};  // main-branch block indices with temporal stride 2
  std::size_t reduction = 4;
  std::array<bool, features::kStreamCount> streams = {true, true, true, true};

  std::size_t nodes_per_person() const { return joints + objects; }
  std::size_t num_nodes() const { return persons * nodes_per_person(); }
  std::size_t stream_channels() const { return 2 * coord_channels; }
  std::size_t enabled_streams() const;
  std::size_t fused_channels() const;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// COCO-17 person with a ball (n=1) or ball and net (n=2) attached to both wrists.
std::vector<graph::ObjectAttachment> wrist_attachments(std::size_t objects);

ModelConfig nba_config();
ModelConfig volleyball_config();

graph::GraphTopology build_topology(const ModelConfig& config);

/// Input streams for a batch: one [B, 2C, T, N] tensor per enabled stream.
using StreamBatch = std::vector<Tensor>;

/// Packs per-sample feature bundles ([T, N, 2C] each) into the model's batch layout.
StreamBatch pack_batch(const std::vector<const features::FeatureBundle*>& samples, const ModelConfig& config);

/// Four input branches -> channel concat -> main branch -> pooled classifier.
class Model {
 public:
  explicit Model(const ModelConfig& config);
  Model(const ModelConfig& config, std::shared_ptr<const graph::PartitionedAdjacency> adjacency);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  void initialize(std::uint64_t seed);

  Tensor forward(const StreamBatch& inputs, Mode mode);  // -> [B, classes]
  /// Backpropagates d(loss)/d(logits) of the last forward, accumulating into Param::grad.
  void backward(const Tensor& dlogits);

  /// Piecewise-decision digest of the last forward pass.
  std::uint64_t signature() const;

  void zero_grad();
  const ParamRefs& refs() const { return refs_; }
  std::size_t parameter_count() const;

  const ModelConfig& config() const { return config_; }
  const graph::PartitionedAdjacency& adjacency() const { return *adjacency_; }

  /// Copies parameter values and buffers from a model with identical structure.
  void copy_state_from(const Model& other);

 private:
  void build();

  ModelConfig config_;
  std::shared_ptr<const graph::PartitionedAdjacency> adjacency_;
  std::vector<std::vector<std::unique_ptr<BasicBlock>>> input_branches_;  // per enabled stream
  std::vector<std::unique_ptr<BasicBlock>> main_branch_;
  std::unique_ptr<Classifier> classifier_;
  ParamRefs refs_;
  std::vector<std::size_t> branch_widths_;
};

}  // namespace panograph::nn
