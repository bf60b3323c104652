// Acceptance checks: one PASS / FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "panograph/gradcheck.hpp"
#include "panograph/io/config.hpp"
#include "panograph/io/synthetic.hpp"
#include "panograph/nn/loss.hpp"
#include "panograph/nn/model.hpp"
#include "panograph/reassign.hpp"
#include "panograph/train.hpp"

namespace {

using namespace panograph;
namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << o.detail << std::endl;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
  const auto reports = gradcheck::run_seeds(seeds);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  bool ok = !reports.empty();
  for (const auto& r : reports) {
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = r.name;
    }
    ok &= r.checked > 0 && r.max_rel_error < 1e-4;
  }
  ok &= elapsed < 60.0;
  return {ok, fmt("%zu groups, worst %.2e (%s), %.1f s", reports.size(), worst, worst_name.c_str(), elapsed)};
}

Outcome adjacency_invariants() {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto g = oracle::random_topology(rng);
    const std::string problem = oracle::check_adjacency(g, 1e-12);
    if (!problem.empty()) return {false, fmt("topology %d: %s", i, problem.c_str())};
  }
  return {true, "200 topologies"};
}

Outcome reassignment_oracle() {
  using namespace reassign;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> coord(0.0, 100.0), conf(0.0, 1.0);
  double worst_spread = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t M = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const std::size_t history = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
    std::map<TrackId, std::pair<std::vector<double>, std::vector<double>>> paths;
    TrackState state;
    PoseFrame frame;
    for (std::size_t t = 0; t < history; ++t) {
      frame = PoseFrame{t, {}, {}};
      const std::size_t m = std::uniform_int_distribution<std::size_t>(0, 8)(rng);
      std::set<TrackId> ids;
      while (ids.size() < m) ids.insert(std::uniform_int_distribution<TrackId>(0, 15)(rng));
      for (TrackId id : ids) {
        Detection d{id, conf(rng), coord(rng), coord(rng), {}};
        paths[id].first.push_back(d.center_x);
        paths[id].second.push_back(d.center_y);
        frame.detections.push_back(d);
      }
      state.observe(frame);
    }
    const auto got = reassign_frame(frame, state, M);

    std::vector<double> spreads;
    for (const auto& d : frame.detections) {
      const auto& [xs, ys] = paths[d.track_id];
      const double two_pass = oracle::spread(xs, ys);
      worst_spread = std::max(worst_spread, std::abs(two_pass - trajectory_spread(state.stats(d.track_id))));
      spreads.push_back(two_pass);
    }
    double total = 0.0;
    for (double s : spreads) total += std::exp(s);
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < frame.detections.size(); ++i)
      cands.push_back({frame.detections[i].track_id, frame.detections[i].confidence + std::exp(spreads[i]) / total});
    if (got.slots != oracle::assign(cands, M)) return {false, fmt("frame %d differs from brute force", trial)};
  }
  return {worst_spread <= 1e-9, fmt("1000 frames match, spread error %.1e", worst_spread)};
}

double mean_track_length(const io::SyntheticSpec& spec, reassign::ScoreMode mode) {
  double sum = 0.0;
  for (std::size_t i = 0; i < spec.sample_count(); ++i) {
    const auto s = io::generate_sample(spec, i);
    sum += reassign::assemble_sequence(s.detections, spec.persons, spec.joints, spec.objects, spec.frames, mode)
               .report.mean_track_len;
  }
  return sum / static_cast<double>(spec.sample_count());
}

Outcome track_consistency() {
  std::size_t wins = 0;
  double with_act = 0.0, conf_only = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    io::SyntheticSpec spec;
    spec.seed = seed;
    spec.detections = io::DetectionNoise::overlapping();
    const double a = mean_track_length(spec, reassign::ScoreMode::ConfidenceActiveness);
    const double c = mean_track_length(spec, reassign::ScoreMode::ConfidenceOnly);
    wins += a >= c;
    with_act += a / 20.0;
    conf_only += c / 20.0;
  }
  return {wins >= 18 && with_act > conf_only,
          fmt("conf+act >= conf in %zu/20 seeds, mean %.2f vs %.2f frames", wins, with_act, conf_only)};
}

Outcome parameter_counts() {
  const double nba = static_cast<double>(nn::Model(nn::nba_config()).parameter_count());
  const double vb = static_cast<double>(nn::Model(nn::volleyball_config()).parameter_count());
  const bool ok = std::abs(nba / 4.4e6 - 1.0) <= 0.2 && std::abs(vb / 3.70e6 - 1.0) <= 0.2;
  return {ok, fmt("NBA %.2fM (target 4.4M), Volleyball %.2fM (target 3.70M)", nba / 1e6, vb / 1e6)};
}

std::vector<train::Sample> synthetic_samples(const io::SyntheticSpec& spec) {
  const auto body = io::synthetic_body(spec);
  std::vector<train::Sample> out;
  for (const auto& s : io::generate_synthetic(spec)) out.push_back({features::compute_features(s.skeleton, body), s.label});
  return out;
}

std::unique_ptr<train::TrainResult> overfit_result;

Outcome synthetic_overfit() {
  io::SyntheticSpec spec;
  const auto samples = synthetic_samples(spec);
  auto run = io::synthetic_run_config();
  run.train.epochs = 200;
  train::TrainOptions options;
  options.stop_at_train_mca = 0.95;
  const auto t0 = Clock::now();
  overfit_result = std::make_unique<train::TrainResult>(train::train_loop(samples, {}, run.model, run.train, options));
  const double elapsed = seconds_since(t0);
  const auto& last = overfit_result->records.back();
  const bool overfit = last.train_mca >= 0.95 && elapsed < 600.0;

  // Ablations: train on one draw of the family, score on a fresh draw.
  io::SyntheticSpec held_out = spec;
  held_out.seed = spec.seed + 1000;
  const auto test = synthetic_samples(held_out);
  auto final_accuracy = [&](nn::ModelConfig model) {
    auto cfg = run.train;
    cfg.epochs = 30;
    return train::train_loop(samples, test, model, cfg).records.back().val_mca.value();
  };
  const double full = final_accuracy(run.model);
  auto no_inter = run.model;
  no_inter.inter = graph::InterVariant::None;
  auto no_motion = run.model;
  no_motion.streams = {true, true, false, false};
  const double inter_acc = final_accuracy(no_inter);
  const double motion_acc = final_accuracy(no_motion);
  const bool ablation = inter_acc < full && motion_acc < full;
  return {overfit && ablation,
          fmt("train MCA %.3f at epoch %zu in %.0f s; held-out MCA full %.3f, no inter links %.3f, no motion %.3f",
              last.train_mca, last.epoch + 1, elapsed, full, inter_acc, motion_acc)};
}

Outcome anchors() {
  const train::TrainConfig cfg;
  const bool lr = train::lr_at(4, cfg) == 0.1 && train::lr_at(5, cfg) == 0.1;
  const Tensor logits({1, 8}, 0.0);
  const std::vector<std::size_t> label = {3};
  const double ce = nn::cross_entropy(logits, label).loss;
  const bool loss = std::abs(ce - std::log(8.0)) <= 1e-9;
  bool fused = false;
  if (overfit_result) {
    io::SyntheticSpec spec;
    spec.seed = 5;
    const auto samples = synthetic_samples(spec);
    const auto& m = overfit_result->final_model;
    const auto single = train::evaluate(samples, {&m});
    const auto both = train::evaluate(samples, {&m, &m});
    fused = single.mca == both.mca && single.mpca == both.mpca && single.confusion == both.confusion;
  }
  return {lr && loss && fused, fmt("lr_at(4)=%g lr_at(5)=%g, CE=%.12f, fused self-evaluation %s", train::lr_at(4, cfg),
                                   train::lr_at(5, cfg), ce, fused ? "identical" : "differs")};
}

int shell(const std::string& cmd, const fs::path& log) {
  const int status = std::system((cmd + " >> '" + log.string() + "' 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome pipeline() {
  const fs::path dir = fs::temp_directory_path() / ("panograph_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "pipeline.log";
  const std::string cli = PANOGRAPH_CLI;
  const std::string data = (dir / "data").string(), run = (dir / "run").string();
  const std::string config = std::string(PANOGRAPH_SOURCE_DIR) + "/configs/synthetic.cfg";
  const std::vector<std::pair<std::string, std::string>> stages = {
      {"synth", cli + " synth --out " + data},
      {"reassign", cli + " reassign --data " + data},
      {"features", cli + " features --data " + data},
      {"train", cli + " train --config " + config + " --data " + data + " --out " + run},
      {"eval", cli + " eval --data " + data + " --ckpt " + run + "/best.ckpt --ckpt " + run + "/final.ckpt --fuse"},
  };
  for (const auto& [name, cmd] : stages) {
    const int code = shell(cmd, log);
    if (code != 0) return {false, fmt("%s exited %d, see %s", name.c_str(), code, log.string().c_str())};
  }
  std::ifstream metrics(run + "/metrics.jsonl");
  std::size_t epochs = 0;
  double last_val = -1.0;
  for (std::string line; std::getline(metrics, line);) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"epoch", "lr", "train_loss", "train_mca", "val_mca"})
      if (!j.contains(key)) return {false, fmt("metrics line %zu lacks %s", epochs + 1, key)};
    if (!j["val_mca"].is_null()) last_val = j["val_mca"].get<double>();
    ++epochs;
  }
  const auto ckpt = train::load_checkpoint(run + "/final.ckpt");
  const bool ok = epochs > 0 && ckpt.model && fs::exists(run + "/best.ckpt");
  fs::remove_all(dir);
  return {ok, fmt("5 stages exit 0, %zu metric lines, final val MCA %.3f, %zu-parameter checkpoint loads", epochs,
                  last_val, ckpt.model ? ckpt.model->parameter_count() : std::size_t{0})};
}

}  // namespace

int main() {
  report(1, "gradient suite", gradient_suite);
  report(2, "adjacency invariants", adjacency_invariants);
  report(3, "reassignment oracle", reassignment_oracle);
  report(4, "track consistency", track_consistency);
  report(5, "parameter counts", parameter_counts);
  report(6, "synthetic overfit and ablations", synthetic_overfit);
  report(7, "schedule and loss anchors", anchors);
  report(8, "end-to-end pipeline", pipeline);
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
