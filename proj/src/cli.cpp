#include "panograph/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "panograph/errors.hpp"
#include "panograph/features.hpp"
#include "panograph/gradcheck.hpp"
#include "panograph/io/config.hpp"
#include "panograph/io/container.hpp"
#include "panograph/io/dataset.hpp"
#include "panograph/io/jsonl.hpp"
#include "panograph/io/synthetic.hpp"
#include "panograph/kernels.hpp"
#include "panograph/reassign.hpp"
#include "panograph/train.hpp"

namespace panograph::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct SynthArgs {
  std::string out;
  io::SyntheticSpec spec;
  bool overlap = false;
};

struct ReassignArgs {
  std::string data;
  std::string input;
  std::string output;
  std::string report;
  std::size_t persons = 0;
  std::size_t joints = 0;
  std::size_t objects = 0;
  std::size_t frames = 0;
  std::string mode = "conf+act";
};

struct FeaturesArgs {
  std::string data;
  std::string source = "reassigned";
  std::size_t channels = 3;
};

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
};

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string data;
  std::string split = "val";
  bool fuse = false;
};

struct GradcheckArgs {
  std::uint64_t seed = 7;
  std::size_t seeds = 1;
};

reassign::ScoreMode parse_mode(const std::string& mode) {
  if (mode == "conf+act") return reassign::ScoreMode::ConfidenceActiveness;
  if (mode == "conf") return reassign::ScoreMode::ConfidenceOnly;
  throw ConfigError("unknown score mode '" + mode + "' (expected conf+act or conf)");
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  io::SyntheticSpec spec = a.spec;
  if (a.overlap) spec.detections = io::DetectionNoise::overlapping();
  const io::Manifest m = io::write_synthetic_dataset(a.out, spec);
  const auto val = std::count_if(m.samples.begin(), m.samples.end(), [](const auto& s) { return s.validation; });
  out << "wrote " << m.samples.size() << " samples (" << val << " validation) to " << a.out << "\n";
  return 0;
}

int run_reassign(const ReassignArgs& a, std::ostream& out) {
  const auto mode = parse_mode(a.mode);
  if (!a.data.empty()) {
    const fs::path dir = a.data;
    const io::Manifest m = io::read_manifest(dir);
    double total = 0.0;
    for (const auto& r : m.samples) {
      const fs::path src = dir / "detections" / (r.id + ".jsonl");
      const auto frames = io::parse_detections(io::read_file(src), m.joints, m.objects, src.string());
      const auto seq = reassign::assemble_sequence(frames, m.persons, m.joints, m.objects, m.frames, mode);
      io::save_skeleton(dir / "reassigned" / (r.id + ".pgt"), seq.skeleton, r.label);
      io::write_file_atomic(dir / "reassigned" / (r.id + ".json"), io::format_report(seq.report));
      total += seq.report.mean_track_len;
    }
    out << "reassigned " << m.samples.size() << " clips, mean track length "
        << (m.samples.empty() ? 0.0 : total / static_cast<double>(m.samples.size())) << " frames\n";
    return 0;
  }
  if (a.input.empty() || a.output.empty() || a.persons == 0 || a.joints == 0) {
    throw ConfigError("reassign needs --data, or --input, --output, --persons and --joints");
  }
  const auto frames = io::parse_detections(io::read_file(a.input), a.joints, a.objects, a.input);
  if (frames.empty()) throw InputError(a.input + ": no records");
  const auto seq = reassign::assemble_sequence(frames, a.persons, a.joints, a.objects, a.frames, mode);
  io::Container c;
  c.add("skeleton", seq.skeleton);
  io::write_container(a.output, c);
  const std::string report = io::format_report(seq.report);
  if (!a.report.empty()) io::write_file_atomic(a.report, report);
  out << report;
  return 0;
}

int run_features(const FeaturesArgs& a, std::ostream& out) {
  const fs::path dir = a.data;
  const io::Manifest m = io::read_manifest(dir);
  const auto body = m.body();
  if (a.source != "reassigned" && a.source != "truth") {
    throw ConfigError("unknown source '" + a.source + "' (expected reassigned or truth)");
  }
  for (const auto& r : m.samples) {
    const fs::path src = a.source == "truth" ? dir / (r.id + ".pgt") : dir / "reassigned" / (r.id + ".pgt");
    if (!fs::exists(src)) throw InputError("missing " + src.string() + (a.source == "reassigned" ? " (run the reassign stage)" : ""));
    const auto labeled = io::load_skeleton(src);
    const Tensor skeleton = features::select_channels(labeled.skeleton, a.channels);
    io::save_features(dir / "features" / (r.id + ".pgt"), features::compute_features(skeleton, body), labeled.label);
  }
  out << "cached features of " << m.samples.size() << " clips\n";
  return 0;
}

void check_compatible(const io::Manifest& m, const nn::ModelConfig& c) {
  auto mismatch = [](const char* key, std::size_t data, std::size_t model) {
    throw InputError(std::string("dataset/config mismatch: ") + key + " is " + std::to_string(data) +
                     " in the dataset but " + std::to_string(model) + " in the config");
  };
  if (m.persons != c.persons) mismatch("persons", m.persons, c.persons);
  if (m.joints != c.joints) mismatch("joints", m.joints, c.joints);
  if (m.objects != c.objects) mismatch("objects", m.objects, c.objects);
  if (m.frames != c.frames) mismatch("frames", m.frames, c.frames);
  if (m.num_classes != c.num_classes) mismatch("num_classes", m.num_classes, c.num_classes);
  if (m.layout != c.layout) throw InputError("dataset/config mismatch: skeleton layout differs");
}

int run_train(const TrainArgs& a, std::ostream& out) {
  const auto run = io::load_run_config(a.config);
  const fs::path dir = a.data;
  const io::Manifest m = io::read_manifest(dir);
  check_compatible(m, run.model);
  const auto train_set = io::load_feature_split(dir, m, io::Split::Train);
  const auto val_set = io::load_feature_split(dir, m, io::Split::Validation);
  train::TrainOptions options;
  options.out_dir = fs::path(a.out);
  io::write_file_atomic(fs::path(a.out) / "run.cfg", io::format_run_config(run));
  const auto result = train::train_loop(train_set, val_set, run.model, run.train, options);
  const auto& last = result.records.back();
  out << "trained " << result.records.size() << " epochs on " << train_set.size() << " clips: train loss "
      << last.train_loss << ", train MCA " << last.train_mca;
  if (last.val_mca) out << ", val MCA " << *last.val_mca;
  out << "; best epoch " << result.best_epoch << "\n";
  return 0;
}

json metrics_json(const train::Metrics& m) {
  return {{"mca", m.mca}, {"mpca", m.mpca}, {"confusion", m.confusion}};
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const fs::path dir = a.data;
  const io::Manifest m = io::read_manifest(dir);
  const auto samples = io::load_feature_split(dir, m, io::parse_split(a.split));
  std::vector<train::TrainedModel> models;
  for (const auto& path : a.checkpoints) {
    models.push_back(train::load_checkpoint(path));
    check_compatible(m, models.back().model->config());
  }
  if (a.fuse) {
    std::vector<const train::TrainedModel*> ptrs;
    for (const auto& model : models) ptrs.push_back(&model);
    json j = metrics_json(train::evaluate(samples, ptrs));
    j["checkpoints"] = a.checkpoints;
    j["fused"] = true;
    out << j.dump() << "\n";
    return 0;
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    json j = metrics_json(train::evaluate(samples, {&models[i]}));
    j["checkpoint"] = a.checkpoints[i];
    out << j.dump() << "\n";
  }
  return 0;
}

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  constexpr double kTolerance = 1e-4;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.seeds; ++i) seeds.push_back(a.seed + i);
  bool ok = true;
  for (const auto& r : gradcheck::run_seeds(seeds)) {
    const bool pass = r.max_rel_error < kTolerance && r.checked > 0;
    ok = ok && pass;
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s max_rel_error=%.3e checked=%zu skipped=%zu %s\n", r.name.c_str(),
                  r.max_rel_error, r.checked, r.skipped, pass ? "ok" : "FAIL");
    out << line;
  }
  return ok ? 0 : 1;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  kernels::configure_threads_from_env();
  CLI::App app{"Panoramic multi-person graph network for group activity recognition", "panograph"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--classes", synth.spec.num_classes, "Number of classes");
  s->add_option("--per-class", synth.spec.samples_per_class, "Samples per class");
  s->add_option("--persons", synth.spec.persons, "Persons per clip (M)");
  s->add_option("--joints", synth.spec.joints, "Joints per person (V)");
  s->add_option("--objects", synth.spec.objects, "Object keypoints (n)");
  s->add_option("--frames", synth.spec.frames, "Frames per clip (T)");
  s->add_option("--noise", synth.spec.noise_std, "Coordinate noise std in pixels");
  s->add_option("--seed", synth.spec.seed, "Random seed");
  s->add_flag("--overlap", synth.overlap, "Bystanders as confident as players");

  ReassignArgs re;
  auto* r = app.add_subcommand("reassign", "Map tracked detections onto a fixed person roster");
  r->add_option("--data", re.data, "Dataset directory (all clips)");
  r->add_option("--input", re.input, "Single detection stream (JSONL)");
  r->add_option("--output", re.output, "Skeleton container to write");
  r->add_option("--report", re.report, "Track-length report (JSON)");
  r->add_option("--persons", re.persons, "Roster size M");
  r->add_option("--joints", re.joints, "Keypoints per detection");
  r->add_option("--objects", re.objects, "Object keypoints");
  r->add_option("--frames", re.frames, "Clip length (default: last frame + 1)");
  r->add_option("--mode", re.mode, "Score: conf+act or conf")->check(CLI::IsMember({"conf+act", "conf"}));

  FeaturesArgs fe;
  auto* f = app.add_subcommand("features", "Cache the four feature streams of every clip");
  f->add_option("--data", fe.data, "Dataset directory")->required();
  f->add_option("--source", fe.source, "Skeletons to use: reassigned or truth")
      ->check(CLI::IsMember({"reassigned", "truth"}));
  f->add_option("--channels", fe.channels, "Coordinate channels: 2 (x, y) or 3 (x, y, visibility)")
      ->check(CLI::IsMember({2, 3}));

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on cached features");
  t->add_option("--config", tr.config, "Configuration file")->required();
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--out", tr.out, "Run directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate checkpoints (optionally fused)");
  e->add_option("--ckpt", ev.checkpoints, "Checkpoint file (repeatable)")->required();
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--split", ev.split, "train, val or all")->check(CLI::IsMember({"train", "val", "all"}));
  e->add_flag("--fuse", ev.fuse, "Average softmax scores across checkpoints");

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient suite on the tiny model");
  g->add_option("--seed", gc.seed, "First seed");
  g->add_option("--seeds", gc.seeds, "Number of consecutive seeds");

  if (args.empty()) {
    err << app.help();
    return 2;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n" << "run 'panograph --help' for usage\n";
    return 2;
  }

  try {
    if (s->parsed()) return run_synth(synth, out);
    if (r->parsed()) return run_reassign(re, out);
    if (f->parsed()) return run_features(fe, out);
    if (t->parsed()) return run_train(tr, out);
    if (e->parsed()) return run_eval(ev, out);
    if (g->parsed()) return run_gradcheck(gc, out);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace panograph::cli
