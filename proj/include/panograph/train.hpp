#pragma once

// SGD-Nesterov training with linear warmup and cosine decay, input
// standardization, checkpoints and MCA / MPCA evaluation with late fusion.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "panograph/features.hpp"
#include "panograph/io/container.hpp"
#include "panograph/nn/model.hpp"

namespace panograph::train {

struct TrainConfig {
  std::size_t epochs = 65;
  std::size_t warmup_epochs = 5;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 2e-4;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Learning rate for a zero-based epoch. Throws InputError outside [0, epochs).
double lr_at(std::size_t epoch, const TrainConfig& config);

struct OptimizerState {
  std::vector<Tensor> velocity;  // one per parameter, in ParamRefs order
  std::size_t step = 0;
  std::size_t epoch = 0;
};

/// g = grad + wd * p (decaying params only); v = mu * v + g; p -= lr * (g + mu * v).
/// Throws TrainingError naming the first parameter with a non-finite gradient.
void sgd_nesterov_step(const std::vector<nn::Param*>& params, OptimizerState& state, double lr,
                       const TrainConfig& config);

struct Sample {
  features::FeatureBundle features;  // streams [T, N, 2C]
  std::size_t label = 0;
};

/// Per-stream, per-channel z-score statistics.
struct Normalizer {
  std::array<std::vector<double>, features::kStreamCount> mean;
  std::array<std::vector<double>, features::kStreamCount> std;

  static Normalizer fit(const std::vector<const Sample*>& samples, std::size_t channels);
  static Normalizer identity(std::size_t channels);
  features::FeatureBundle apply(const features::FeatureBundle& bundle) const;

  void store(io::Container& container) const;
  static Normalizer load(const io::Container& container);
};

struct TrainedModel {
  std::unique_ptr<nn::Model> model;
  Normalizer normalizer;
};

/// Parameters, buffers and normalizer in one container; the model config goes to `<path>.cfg`.
void save_checkpoint(const std::filesystem::path& path, const nn::Model& model, const Normalizer& normalizer);
TrainedModel load_checkpoint(const std::filesystem::path& path);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_mca = 0.0;
  std::optional<double> val_mca;
};

/// One JSON object per line: {"epoch", "lr", "train_loss", "train_mca", "val_mca"}.
std::string to_json(const EpochRecord& record);

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;  // metrics.jsonl, best.ckpt, final.ckpt
  std::optional<double> lr_override;             // replaces the schedule when set
  bool normalize_inputs = true;
  std::optional<double> stop_at_train_mca;       // ends training after the first epoch reaching it
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> records;
  TrainedModel final_model;
  std::size_t best_epoch = 0;
  double best_score = -1.0;  // validation MCA, or training MCA without a validation split
};

/// Throws InputError on an empty training set, bad labels or feature shapes that do not fit `model_config`.
TrainResult train_loop(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                       const nn::ModelConfig& model_config, const TrainConfig& config,
                       const TrainOptions& options = {});

struct Metrics {
  double mca = 0.0;
  double mpca = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// MPCA averages recall over classes present in `labels`.
Metrics compute_metrics(const std::vector<std::size_t>& labels, const std::vector<std::size_t>& predictions,
                        std::size_t num_classes);

/// Softmax scores [S, K] of one model, evaluated in batches.
Tensor predict_scores(const TrainedModel& model, const std::vector<Sample>& samples, std::size_t batch_size = 16);

/// Averages softmax scores over all models before argmax (ties -> smallest class).
Metrics evaluate(const std::vector<Sample>& samples, const std::vector<const TrainedModel*>& models);

}  // namespace panograph::train
