#include "panograph/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "panograph/errors.hpp"
#include "panograph/io/config.hpp"
#include "panograph/nn/loss.hpp"

namespace panograph::train {

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (warmup_epochs >= epochs) throw ConfigError("warmup_epochs must be smaller than epochs");
  if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
  if (epoch >= config.epochs) {
    throw InputError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(config.epochs) + ")");
  }
  if (epoch < config.warmup_epochs) {
    return config.base_lr * static_cast<double>(epoch + 1) / static_cast<double>(config.warmup_epochs);
  }
  const double progress =
      static_cast<double>(epoch - config.warmup_epochs) / static_cast<double>(config.epochs - config.warmup_epochs);
  return config.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void sgd_nesterov_step(const std::vector<nn::Param*>& params, OptimizerState& state, double lr,
                       const TrainConfig& config) {
  if (state.velocity.empty()) {
    for (const nn::Param* p : params) state.velocity.emplace_back(p->value.shape());
  }
  if (state.velocity.size() != params.size()) throw ContractError("optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Param& p = *params[i];
    if (!state.velocity[i].same_shape(p.value) || !p.grad.same_shape(p.value)) {
      throw ContractError("optimizer shapes differ for " + p.name);
    }
    if (!all_finite(p.grad.values())) throw TrainingError("non-finite gradient in " + p.name);
  }
  const double mu = config.momentum;
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Param& p = *params[i];
    const double wd = p.decay ? config.weight_decay : 0.0;
    Tensor& v = state.velocity[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k] + wd * p.value[k];
      v[k] = mu * v[k] + g;
      p.value[k] -= lr * (g + mu * v[k]);
    }
  }
  ++state.step;
}

Normalizer Normalizer::identity(std::size_t channels) {
  Normalizer n;
  for (std::size_t s = 0; s < features::kStreamCount; ++s) {
    n.mean[s].assign(channels, 0.0);
    n.std[s].assign(channels, 1.0);
  }
  return n;
}

Normalizer Normalizer::fit(const std::vector<const Sample*>& samples, std::size_t channels) {
  Normalizer n = identity(channels);
  for (std::size_t s = 0; s < features::kStreamCount; ++s) {
    std::vector<double> sum(channels, 0.0), sq(channels, 0.0);
    std::size_t count = 0;
    for (const Sample* sample : samples) {
      const Tensor& x = sample->features.streams[s];
      if (x.empty()) continue;
      const std::size_t rows = x.size() / channels;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < channels; ++c) sum[c] += x[r * channels + c];
      count += rows;
    }
    if (count == 0) continue;
    for (std::size_t c = 0; c < channels; ++c) n.mean[s][c] = sum[c] / static_cast<double>(count);
    for (const Sample* sample : samples) {
      const Tensor& x = sample->features.streams[s];
      if (x.empty()) continue;
      const std::size_t rows = x.size() / channels;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < channels; ++c) {
          const double d = x[r * channels + c] - n.mean[s][c];
          sq[c] += d * d;
        }
    }
    for (std::size_t c = 0; c < channels; ++c) {
      const double sd = std::sqrt(sq[c] / static_cast<double>(count));
      n.std[s][c] = sd > 1e-8 ? sd : 1.0;
    }
  }
  return n;
}

features::FeatureBundle Normalizer::apply(const features::FeatureBundle& bundle) const {
  features::FeatureBundle out = bundle;
  for (std::size_t s = 0; s < features::kStreamCount; ++s) {
    Tensor& x = out.streams[s];
    const std::size_t C = mean[s].size();
    if (x.empty() || C == 0) continue;
    if (x.dim(x.rank() - 1) != C) throw InputError("feature channels do not match normalizer");
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = (x[k] - mean[s][k % C]) / std[s][k % C];
  }
  return out;
}

void Normalizer::store(io::Container& container) const {
  for (std::size_t s = 0; s < features::kStreamCount; ++s) {
    const std::string name = "input." + features::to_string(static_cast<features::Stream>(s));
    container.add(name + ".mean", Tensor({mean[s].size()}, mean[s]));
    container.add(name + ".std", Tensor({std[s].size()}, std[s]));
  }
}

Normalizer Normalizer::load(const io::Container& container) {
  Normalizer n;
  for (std::size_t s = 0; s < features::kStreamCount; ++s) {
    const std::string name = "input." + features::to_string(static_cast<features::Stream>(s));
    n.mean[s] = container.get(name + ".mean").storage();
    n.std[s] = container.get(name + ".std").storage();
  }
  return n;
}

void save_checkpoint(const std::filesystem::path& path, const nn::Model& model, const Normalizer& normalizer) {
  io::Container c;
  for (const nn::Param* p : model.refs().params) c.add(p->name, p->value);
  for (const nn::Buffer* b : model.refs().buffers) c.add(b->name, b->value);
  normalizer.store(c);
  std::filesystem::path cfg = path;
  cfg += ".cfg";
  io::write_file_atomic(cfg, io::format_model_config(model.config()));
  io::write_container(path, c);
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::filesystem::path cfg_path = path;
  cfg_path += ".cfg";
  const auto run = io::parse_run_config(io::read_file(cfg_path), cfg_path.string(), {}, true);
  const io::Container c = io::read_container(path);
  TrainedModel out;
  out.model = std::make_unique<nn::Model>(run.model);
  auto load = [&](const std::string& name, Tensor& dst) {
    const Tensor& src = c.get(name);
    if (!src.same_shape(dst)) {
      throw FormatError(path.string() + ": entry '" + name + "' has shape " + shape_string(src.shape()) +
                        ", model expects " + shape_string(dst.shape()));
    }
    dst = src;
  };
  for (nn::Param* p : out.model->refs().params) load(p->name, p->value);
  for (nn::Buffer* b : out.model->refs().buffers) load(b->name, b->value);
  out.normalizer = Normalizer::load(c);
  return out;
}

std::string to_json(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["train_loss"] = r.train_loss;
  j["train_mca"] = r.train_mca;
  j["val_mca"] = r.val_mca ? nlohmann::json(*r.val_mca) : nlohmann::json(nullptr);
  return j.dump();
}

namespace {

std::size_t argmax(const double* row, std::size_t K) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < K; ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

void check_samples(const std::vector<Sample>& samples, const nn::ModelConfig& config, const char* what) {
  const Shape expected{config.frames, config.num_nodes(), config.stream_channels()};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.label >= config.num_classes) {
      throw InputError(std::string(what) + " sample " + std::to_string(i) + " has label " + std::to_string(s.label) +
                       " but the model has " + std::to_string(config.num_classes) + " classes");
    }
    for (std::size_t k = 0; k < features::kStreamCount; ++k) {
      if (!config.streams[k]) continue;
      if (s.features.streams[k].shape() != expected) {
        throw InputError(std::string(what) + " sample " + std::to_string(i) + " stream " +
                         features::to_string(static_cast<features::Stream>(k)) + " has shape " +
                         shape_string(s.features.streams[k].shape()) + ", model expects " + shape_string(expected));
      }
    }
  }
}

nn::StreamBatch make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
                           std::size_t begin, std::size_t end, const Normalizer& norm,
                           const nn::ModelConfig& config) {
  std::vector<features::FeatureBundle> normalized;
  normalized.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) normalized.push_back(norm.apply(samples[order[i]].features));
  std::vector<const features::FeatureBundle*> ptrs;
  for (const auto& b : normalized) ptrs.push_back(&b);
  return nn::pack_batch(ptrs, config);
}

}  // namespace

TrainResult train_loop(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                       const nn::ModelConfig& model_config, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  model_config.validate();
  if (train_set.empty()) throw InputError("training set is empty");
  check_samples(train_set, model_config, "training");
  check_samples(val_set, model_config, "validation");

  std::vector<const Sample*> ptrs;
  for (const Sample& s : train_set) ptrs.push_back(&s);
  const std::size_t C = model_config.stream_channels();
  const Normalizer norm = options.normalize_inputs ? Normalizer::fit(ptrs, C) : Normalizer::identity(C);

  auto model = std::make_unique<nn::Model>(model_config);
  model->initialize(config.seed);
  OptimizerState state;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  std::ofstream log;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    log.open(*options.out_dir / "metrics.jsonl", std::ios::trunc);
    if (!log) throw InputError("cannot write " + (*options.out_dir / "metrics.jsonl").string());
  }

  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t K = model_config.num_classes;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = options.lr_override ? *options.lr_override : lr_at(epoch, config);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const nn::StreamBatch batch = make_batch(train_set, order, begin, end, norm, model_config);
      std::vector<std::size_t> labels;
      for (std::size_t i = begin; i < end; ++i) labels.push_back(train_set[order[i]].label);
      model->zero_grad();
      const Tensor logits = model->forward(batch, nn::Mode::Train);
      const nn::LossResult loss = nn::cross_entropy(logits, labels);
      if (!std::isfinite(loss.loss)) throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
      model->backward(loss.grad);
      sgd_nesterov_step(model->refs().params, state, lr, config);
      loss_sum += loss.loss * static_cast<double>(end - begin);
      for (std::size_t b = 0; b < labels.size(); ++b)
        if (argmax(logits.data() + b * K, K) == labels[b]) ++correct;
    }
    state.epoch = epoch + 1;

    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr;
    record.train_loss = loss_sum / static_cast<double>(train_set.size());
    record.train_mca = static_cast<double>(correct) / static_cast<double>(train_set.size());
    if (!val_set.empty()) {
      TrainedModel current{std::move(model), norm};
      record.val_mca = evaluate(val_set, {&current}).mca;
      model = std::move(current.model);
    }
    const double score = record.val_mca ? *record.val_mca : record.train_mca;
    if (score > result.best_score) {
      result.best_score = score;
      result.best_epoch = epoch;
      if (options.out_dir) save_checkpoint(*options.out_dir / "best.ckpt", *model, norm);
    }
    if (log.is_open()) log << to_json(record) << '\n' << std::flush;
    if (options.on_epoch) options.on_epoch(record);
    result.records.push_back(record);
    if (options.stop_at_train_mca && record.train_mca >= *options.stop_at_train_mca) break;
  }
  if (options.out_dir) save_checkpoint(*options.out_dir / "final.ckpt", *model, norm);
  result.final_model.model = std::move(model);
  result.final_model.normalizer = norm;
  return result;
}

Metrics compute_metrics(const std::vector<std::size_t>& labels, const std::vector<std::size_t>& predictions,
                        std::size_t num_classes) {
  if (labels.empty()) throw InputError("cannot compute metrics of an empty dataset");
  if (labels.size() != predictions.size()) throw ContractError("labels and predictions differ in length");
  Metrics m;
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes || predictions[i] >= num_classes) throw InputError("class index out of range");
    ++m.confusion[labels[i]][predictions[i]];
    if (labels[i] == predictions[i]) ++correct;
  }
  m.mca = static_cast<double>(correct) / static_cast<double>(labels.size());
  double recall_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    std::size_t total = 0;
    for (std::size_t c : m.confusion[k]) total += c;
    if (total == 0) continue;
    recall_sum += static_cast<double>(m.confusion[k][k]) / static_cast<double>(total);
    ++present;
  }
  m.mpca = recall_sum / static_cast<double>(present);
  return m;
}

Tensor predict_scores(const TrainedModel& trained, const std::vector<Sample>& samples, std::size_t batch_size) {
  nn::Model& model = *trained.model;
  const auto& config = model.config();
  check_samples(samples, config, "evaluation");
  const std::size_t K = config.num_classes;
  Tensor scores({samples.size(), K});
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const std::size_t end = std::min(samples.size(), begin + batch_size);
    const Tensor logits =
        model.forward(make_batch(samples, order, begin, end, trained.normalizer, config), nn::Mode::Eval);
    for (std::size_t b = 0; b < end - begin; ++b) {
      const auto p = nn::softmax(std::span<const double>(logits.data() + b * K, K));
      std::copy(p.begin(), p.end(), scores.data() + (begin + b) * K);
    }
  }
  return scores;
}

Metrics evaluate(const std::vector<Sample>& samples, const std::vector<const TrainedModel*>& models) {
  if (samples.empty()) throw InputError("evaluation dataset is empty");
  if (models.empty()) throw InputError("at least one checkpoint is required");
  const std::size_t K = models.front()->model->config().num_classes;
  for (const TrainedModel* m : models) {
    if (m->model->config().num_classes != K) throw InputError("fused checkpoints disagree on the number of classes");
  }
  Tensor fused({samples.size(), K});
  for (const TrainedModel* m : models) fused += predict_scores(*m, samples);
  fused *= 1.0 / static_cast<double>(models.size());
  std::vector<std::size_t> labels, predictions;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    labels.push_back(samples[i].label);
    predictions.push_back(argmax(fused.data() + i * K, K));
  }
  return compute_metrics(labels, predictions, K);
}

}  // namespace panograph::train
