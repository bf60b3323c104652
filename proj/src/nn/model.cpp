#include "panograph/nn/model.hpp"

#include <algorithm>
#include <numeric>

#include "panograph/errors.hpp"

namespace panograph::nn {

std::size_t ModelConfig::enabled_streams() const {
  return static_cast<std::size_t>(std::count(streams.begin(), streams.end(), true));
}

std::size_t ModelConfig::fused_channels() const {
  return input_channels.empty() ? 0 : enabled_streams() * input_channels.back();
}

void ModelConfig::validate() const {
  if (persons == 0 || joints == 0 || frames == 0) throw ConfigError("persons, joints and frames must be positive");
  if (coord_channels != 2 && coord_channels != 3) throw ConfigError("coordinate channels must be 2 or 3");
  if (num_classes < 2) throw ConfigError("at least two classes are required");
  if (input_channels.empty() || main_channels.empty()) throw ConfigError("both branches need at least one block");
  if (enabled_streams() == 0) throw ConfigError("at least one input stream must be enabled");
  for (std::size_t c : input_channels)
    if (c == 0 || c % 4 != 0) throw ConfigError("block channels must be positive multiples of 4");
  for (std::size_t c : main_channels)
    if (c == 0 || c % 4 != 0) throw ConfigError("block channels must be positive multiples of 4");
  for (std::size_t s : stride_blocks)
    if (s >= main_channels.size()) throw ConfigError("stride block index out of range");
  if (reduction == 0) throw ConfigError("attention reduction must be positive");
}

std::vector<graph::ObjectAttachment> wrist_attachments(std::size_t objects) {
  constexpr std::size_t kLeftWrist = 9;
  constexpr std::size_t kRightWrist = 10;
  std::vector<graph::ObjectAttachment> out;
  for (std::size_t s = 0; s < objects; ++s) {
    out.push_back({s, kLeftWrist});
    out.push_back({s, kRightWrist});
  }
  return out;
}

ModelConfig nba_config() {
  ModelConfig c;
  c.persons = 12;
  c.joints = 17;
  c.objects = 2;
  c.frames = 72;
  c.coord_channels = 3;
  c.num_classes = 9;
  c.attachments = wrist_attachments(2);
  return c;
}

ModelConfig volleyball_config() {
  ModelConfig c;
  c.persons = 12;
  c.joints = 17;
  c.objects = 0;
  c.frames = 41;
  c.coord_channels = 3;
  c.num_classes = 8;
  return c;
}

graph::GraphTopology build_topology(const ModelConfig& config) {
  auto body = graph::make_body(config.layout, config.joints);
  if (config.objects > 0) body = graph::attach_objects(std::move(body), config.objects, config.attachments);
  return graph::make_panoramic(body, config.persons, config.inter);
}

StreamBatch pack_batch(const std::vector<const features::FeatureBundle*>& samples, const ModelConfig& config) {
  if (samples.empty()) throw ContractError("cannot pack an empty batch");
  const std::size_t B = samples.size(), C = config.stream_channels(), T = config.frames, N = config.num_nodes();
  StreamBatch batch;
  for (std::size_t s = 0; s < features::kStreamCount; ++s) {
    if (!config.streams[s]) continue;
    Tensor x({B, C, T, N});
    for (std::size_t b = 0; b < B; ++b) {
      const Tensor& f = samples[b]->streams[s];
      require_shape(f, {T, N, C}, "feature stream");
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t c = 0; c < C; ++c) x[((b * C + c) * T + t) * N + n] = f[(t * N + n) * C + c];
    }
    batch.push_back(std::move(x));
  }
  return batch;
}

Model::Model(const ModelConfig& config)
    : Model(config, std::make_shared<graph::PartitionedAdjacency>(
                        graph::partition_and_normalize(build_topology(config)))) {}

Model::Model(const ModelConfig& config, std::shared_ptr<const graph::PartitionedAdjacency> adjacency)
    : config_(config), adjacency_(std::move(adjacency)) {
  config_.validate();
  if (!adjacency_ || adjacency_->size != config_.num_nodes()) {
    throw ConfigError("adjacency size does not match persons * nodes per person");
  }
  build();
}

void Model::build() {
  const std::size_t M = config_.persons, J = config_.nodes_per_person();
  for (std::size_t s = 0; s < features::kStreamCount; ++s) {
    if (!config_.streams[s]) continue;
    const std::string prefix = "branch" + std::to_string(s);
    std::vector<std::unique_ptr<BasicBlock>> blocks;
    std::size_t in = config_.stream_channels();
    for (std::size_t j = 0; j < config_.input_channels.size(); ++j) {
      const BlockShape shape{in, config_.input_channels[j], 1, M, J, config_.reduction};
      blocks.push_back(std::make_unique<BasicBlock>(prefix + ".block" + std::to_string(j), shape, adjacency_));
      in = config_.input_channels[j];
    }
    input_branches_.push_back(std::move(blocks));
    branch_widths_.push_back(in);
  }
  std::size_t in = config_.fused_channels();
  for (std::size_t j = 0; j < config_.main_channels.size(); ++j) {
    const std::size_t stride = config_.stride_blocks.count(j) ? 2 : 1;
    const BlockShape shape{in, config_.main_channels[j], stride, M, J, config_.reduction};
    main_branch_.push_back(std::make_unique<BasicBlock>("main.block" + std::to_string(j), shape, adjacency_));
    in = config_.main_channels[j];
  }
  classifier_ = std::make_unique<Classifier>("fc", in, config_.num_classes);

  for (auto& branch : input_branches_)
    for (auto& block : branch) block->collect(refs_);
  for (auto& block : main_branch_) block->collect(refs_);
  classifier_->collect(refs_);
}

void Model::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (Param* p : refs_.params) p->initialize(rng);
  for (Buffer* b : refs_.buffers) {
    const bool is_var = b->name.ends_with("running_var");
    b->value.fill(is_var ? 1.0 : 0.0);
  }
}

Tensor Model::forward(const StreamBatch& inputs, Mode mode) {
  if (inputs.size() != input_branches_.size()) {
    throw ContractError("model expects " + std::to_string(input_branches_.size()) + " input streams, got " +
                        std::to_string(inputs.size()));
  }
  const Shape expected{inputs.empty() ? 0 : inputs.front().dim(0), config_.stream_channels(), config_.frames,
                       config_.num_nodes()};
  std::vector<Tensor> branch_out;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    require_shape(inputs[s], expected, "model input stream");
    Tensor h = inputs[s];
    for (auto& block : input_branches_[s]) h = block->forward(h, mode);
    branch_out.push_back(std::move(h));
  }
  std::vector<const Tensor*> parts;
  for (const auto& t : branch_out) parts.push_back(&t);
  Tensor h = concat_channels(parts);
  for (auto& block : main_branch_) h = block->forward(h, mode);
  return classifier_->forward(h);
}

void Model::backward(const Tensor& dlogits) {
  Tensor g = classifier_->backward(dlogits);
  for (auto it = main_branch_.rbegin(); it != main_branch_.rend(); ++it) g = (*it)->backward(g);
  std::size_t offset = 0;
  for (std::size_t s = 0; s < input_branches_.size(); ++s) {
    Tensor gs = slice_channels(g, offset, branch_widths_[s]);
    offset += branch_widths_[s];
    for (auto it = input_branches_[s].rbegin(); it != input_branches_[s].rend(); ++it) gs = (*it)->backward(gs);
  }
}

std::uint64_t Model::signature() const {
  Signature sig;
  for (const auto& branch : input_branches_)
    for (const auto& block : branch) block->fold(sig);
  for (const auto& block : main_branch_) block->fold(sig);
  return sig.value();
}

void Model::zero_grad() {
  for (Param* p : refs_.params) p->grad.zero();
}

std::size_t Model::parameter_count() const {
  std::size_t total = 0;
  for (const Param* p : refs_.params) total += p->value.size();
  return total;
}

void Model::copy_state_from(const Model& other) {
  const auto& theirs = other.refs();
  if (theirs.params.size() != refs_.params.size() || theirs.buffers.size() != refs_.buffers.size()) {
    throw ContractError("model structures differ");
  }
  for (std::size_t i = 0; i < refs_.params.size(); ++i) {
    if (!refs_.params[i]->value.same_shape(theirs.params[i]->value)) throw ContractError("parameter shape mismatch");
    refs_.params[i]->value = theirs.params[i]->value;
  }
  for (std::size_t i = 0; i < refs_.buffers.size(); ++i) refs_.buffers[i]->value = theirs.buffers[i]->value;
}

}  // namespace panograph::nn
