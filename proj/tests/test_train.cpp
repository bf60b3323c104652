#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

#include "panograph/errors.hpp"
#include "panograph/gradcheck.hpp"
#include "panograph/train.hpp"

namespace {

using namespace panograph;
using namespace panograph::train;

std::vector<Sample> random_samples(const nn::ModelConfig& c, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<Sample> out;
  for (std::size_t i = 0; i < count; ++i) {
    Sample s;
    s.label = i % c.num_classes;
    for (auto& stream : s.features.streams) {
      stream = Tensor({c.frames, c.num_nodes(), c.stream_channels()});
      for (std::size_t k = 0; k < stream.size(); ++k) stream[k] = dist(rng) + static_cast<double>(s.label);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("panograph_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TrainConfig quick_config() {
  TrainConfig t;
  t.epochs = 4;
  t.warmup_epochs = 1;
  t.batch_size = 4;
  return t;
}

TEST(Schedule, WarmupThenCosine) {
  const TrainConfig c;
  EXPECT_DOUBLE_EQ(lr_at(0, c), 0.02);
  EXPECT_EQ(lr_at(4, c), 0.1);
  EXPECT_EQ(lr_at(5, c), 0.1);
  EXPECT_NEAR(lr_at(35, c), 0.05, 1e-12);
  EXPECT_NEAR(lr_at(64, c), 6.8523e-5, 1e-8);
  EXPECT_THROW(lr_at(65, c), InputError);
}

TEST(Schedule, ConfigValidation) {
  TrainConfig c;
  c.warmup_epochs = 70;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Optimizer, NesterovFirstStep) {
  nn::Param p("w", {1}, nn::Init::Zeros);
  p.value[0] = 1.0;
  p.grad = Tensor({1}, 1.0);
  TrainConfig c;
  c.weight_decay = 0.0;
  OptimizerState state;
  sgd_nesterov_step({&p}, state, 0.1, c);
  EXPECT_NEAR(p.value[0], 0.81, 1e-15);
  EXPECT_DOUBLE_EQ(state.velocity[0][0], 1.0);
  sgd_nesterov_step({&p}, state, 0.1, c);
  // v = 0.9 + 1 = 1.9; step 0.1 * (1 + 0.9 * 1.9)
  EXPECT_DOUBLE_EQ(state.velocity[0][0], 1.9);
  EXPECT_NEAR(p.value[0], 0.81 - 0.1 * (1.0 + 0.9 * 1.9), 1e-15);
}

TEST(Optimizer, WeightDecaySkipsNormParameters) {
  nn::Param w("w", {1}, nn::Init::Zeros), g("g", {1}, nn::Init::Ones, 1, false);
  w.value[0] = g.value[0] = 2.0;
  w.grad = g.grad = Tensor({1}, 0.0);
  TrainConfig c;
  c.weight_decay = 0.5;
  OptimizerState state;
  sgd_nesterov_step({&w, &g}, state, 0.1, c);
  EXPECT_LT(w.value[0], 2.0);
  EXPECT_EQ(g.value[0], 2.0);
}

TEST(Optimizer, ZeroLearningRateLeavesParameters) {
  nn::Param p("w", {3}, nn::Init::Zeros);
  p.value = Tensor({3}, std::vector<double>{1.0, -2.0, 3.0});
  p.grad = Tensor({3}, 5.0);
  OptimizerState state;
  sgd_nesterov_step({&p}, state, 0.0, TrainConfig{});
  EXPECT_EQ(p.value.storage(), (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Optimizer, NonFiniteGradientNamesParameter) {
  nn::Param p("block.sgc.weight0", {1}, nn::Init::Zeros);
  p.grad = Tensor({1}, std::nan(""));
  OptimizerState state;
  try {
    sgd_nesterov_step({&p}, state, 0.1, TrainConfig{});
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("block.sgc.weight0"), std::string::npos);
  }
}

TEST(Metrics, AccuracyAndMeanPerClass) {
  const std::vector<std::size_t> labels = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
  const std::vector<std::size_t> preds(10, 0);
  const auto m = compute_metrics(labels, preds, 3);
  EXPECT_DOUBLE_EQ(m.mca, 0.9);
  EXPECT_DOUBLE_EQ(m.mpca, 0.5);
  EXPECT_EQ(m.confusion[1][0], 1u);
}

TEST(Normalizer, StandardizesChannels) {
  const auto c = gradcheck::tiny_config();
  const auto samples = random_samples(c, 6, 1);
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const auto n = Normalizer::fit(ptrs, c.stream_channels());
  const std::size_t C = c.stream_channels();
  std::vector<double> sum(C, 0.0), sq(C, 0.0);
  std::size_t rows = 0;
  for (const auto& s : samples) {
    const auto z = n.apply(s.features).streams[0];
    for (std::size_t r = 0; r < z.size() / C; ++r, ++rows)
      for (std::size_t k = 0; k < C; ++k) {
        sum[k] += z[r * C + k];
        sq[k] += z[r * C + k] * z[r * C + k];
      }
  }
  for (std::size_t k = 0; k < C; ++k) {
    EXPECT_NEAR(sum[k] / rows, 0.0, 1e-12);
    EXPECT_NEAR(sq[k] / rows, 1.0, 1e-12);
  }
  io::Container box;
  n.store(box);
  const auto back = Normalizer::load(box);
  EXPECT_EQ(back.mean, n.mean);
  EXPECT_EQ(back.std, n.std);
}

TEST(Training, MemorizesSmallSet) {
  auto c = gradcheck::tiny_config();
  c.num_classes = 2;
  const auto samples = random_samples(c, 4, 2);
  TrainConfig t = quick_config();
  t.epochs = 60;
  t.weight_decay = 0.0;
  const auto r = train_loop(samples, {}, c, t);
  EXPECT_LT(r.records.back().train_loss, 0.01);
  EXPECT_EQ(r.records.back().train_mca, 1.0);
}

TEST(Training, Deterministic) {
  const auto c = gradcheck::tiny_config();
  const auto samples = random_samples(c, 6, 3);
  const auto a = train_loop(samples, {}, c, quick_config());
  const auto b = train_loop(samples, {}, c, quick_config());
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].train_loss, b.records[i].train_loss);
}

TEST(Training, StopsAtTargetAccuracy) {
  auto c = gradcheck::tiny_config();
  c.num_classes = 2;
  const auto samples = random_samples(c, 4, 2);
  TrainConfig t = quick_config();
  t.epochs = 60;
  TrainOptions o;
  o.stop_at_train_mca = 0.5;
  const auto r = train_loop(samples, {}, c, t, o);
  EXPECT_LT(r.records.size(), 60u);
  EXPECT_GE(r.records.back().train_mca, 0.5);
}

TEST(Training, RejectsBadInput) {
  const auto c = gradcheck::tiny_config();
  auto samples = random_samples(c, 2, 4);
  EXPECT_THROW(train_loop({}, {}, c, quick_config()), InputError);
  samples[0].label = c.num_classes;
  EXPECT_THROW(train_loop(samples, {}, c, quick_config()), InputError);
  samples[0].label = 0;
  samples[1].features.streams[2] = Tensor({1, 1, 1});
  EXPECT_THROW(train_loop(samples, {}, c, quick_config()), InputError);
}

TEST(Training, WritesLogsAndCheckpoints) {
  const auto c = gradcheck::tiny_config();
  const auto samples = random_samples(c, 6, 5);
  const auto dir = scratch_dir("train");
  TrainOptions o;
  o.out_dir = dir;
  const auto r = train_loop(samples, samples, c, quick_config(), o);
  ASSERT_TRUE(std::filesystem::exists(dir / "best.ckpt"));
  ASSERT_TRUE(std::filesystem::exists(dir / "final.ckpt"));
  std::ifstream log(dir / "metrics.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(log, line);) ++lines;
  EXPECT_EQ(lines, r.records.size());

  const auto loaded = load_checkpoint(dir / "final.ckpt");
  const Tensor a = predict_scores(r.final_model, samples);
  const Tensor b = predict_scores(loaded, samples);
  EXPECT_EQ(max_abs_diff(a, b), 0.0);
  std::filesystem::remove_all(dir);
}

TEST(Evaluation, SelfFusionEqualsSingle) {
  const auto c = gradcheck::tiny_config();
  const auto samples = random_samples(c, 6, 6);
  const auto r = train_loop(samples, {}, c, quick_config());
  const auto single = evaluate(samples, {&r.final_model});
  const auto fused = evaluate(samples, {&r.final_model, &r.final_model});
  EXPECT_EQ(single.mca, fused.mca);
  EXPECT_EQ(single.confusion, fused.confusion);
}

TEST(Evaluation, RecordJson) {
  EpochRecord rec{3, 0.05, 1.25, 0.5, std::nullopt};
  EXPECT_NE(to_json(rec).find("\"val_mca\":null"), std::string::npos);
  rec.val_mca = 0.75;
  EXPECT_NE(to_json(rec).find("\"val_mca\":0.75"), std::string::npos);
}

}  // namespace
