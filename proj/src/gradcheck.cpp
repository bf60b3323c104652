#include "panograph/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>

#include "panograph/nn/attention.hpp"
#include "panograph/nn/block.hpp"
#include "panograph/nn/layers.hpp"
#include "panograph/nn/loss.hpp"
#include "panograph/nn/tcn.hpp"

namespace panograph::gradcheck {

namespace {

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(shape);
  std::normal_distribution<double> dist(0.0, scale);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Moves parameters off their defaults so biases, masks and batch-norm affine
// terms all carry non-trivial gradients.
void randomize(const std::vector<nn::Param*>& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  for (nn::Param* p : params) {
    p->initialize(rng);
    for (double& v : p->value.values()) v += 0.2 * jitter(rng);
  }
}

std::vector<std::size_t> sample_entries(const Tensor& analytic, std::size_t count, std::mt19937_64& rng) {
  if (count == 0 || 2 * count >= analytic.size()) return {};
  std::vector<std::size_t> all(analytic.size());
  std::vector<std::size_t> nonzero;
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i] = i;
    if (analytic[i] != 0.0) nonzero.push_back(i);
  }
  std::shuffle(all.begin(), all.end(), rng);
  std::shuffle(nonzero.begin(), nonzero.end(), rng);
  std::vector<std::size_t> picked(all.begin(), all.begin() + static_cast<long>(count));
  for (std::size_t i = 0; i < std::min(count, nonzero.size()); ++i) picked.push_back(nonzero[i]);
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  return picked;
}

using Grouping = std::function<std::string(const std::string&)>;

std::vector<Target> param_targets(const nn::ParamRefs& refs, const std::string& group, const Grouping& grouping = {}) {
  std::vector<Target> out;
  for (nn::Param* p : refs.params) out.push_back({grouping ? grouping(p->name) : group, &p->value, p->grad, {}});
  return out;
}

// Linear probe loss sum(y * R) around a layer; reports cover its parameters and input.
template <typename Forward, typename Backward, typename Fold>
std::vector<Report> probe_layer(const std::string& name, Tensor& input, const nn::ParamRefs& refs, Forward forward,
                                Backward backward, Fold fold, std::mt19937_64& rng, const Options& options,
                                const Grouping& grouping = {}) {
  for (nn::Param* p : refs.params) p->grad.zero();
  const Tensor y = forward(input);
  const Tensor probe = random_tensor(y.shape(), rng);
  const Tensor dx = backward(probe);
  std::vector<Target> targets = param_targets(refs, name, grouping);
  targets.push_back({name + ".input", &input, dx, {}});
  auto loss = [&] {
    Evaluation e;
    e.loss = dot(forward(input), probe);
    nn::Signature sig;
    fold(sig);
    e.signature = sig.value();
    return e;
  };
  return check_targets(loss, targets, options);
}

std::string tcn_group(const std::string& param_name) {
  const auto pos = param_name.find(".branch");
  if (pos == std::string::npos) return "tcn";
  return "tcn" + param_name.substr(pos, 8);
}

constexpr auto kSmooth = [](nn::Signature&) {};

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

std::vector<Report> check_targets(const std::function<Evaluation()>& loss, std::vector<Target>& targets,
                                  const Options& options) {
  std::vector<Report> reports;
  std::map<std::string, std::size_t> index;
  const std::uint64_t base = loss().signature;
  for (Target& target : targets) {
    auto [it, inserted] = index.try_emplace(target.group, reports.size());
    if (inserted) reports.push_back({target.group, 0.0, 0, 0});
    Report& report = reports[it->second];

    std::vector<std::size_t> entries = target.entries;
    if (entries.empty()) {
      entries.resize(target.value->size());
      for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = i;
    }
    for (std::size_t i : entries) {
      double& v = (*target.value)[i];
      const double saved = v;
      v = saved + options.step;
      const Evaluation plus = loss();
      v = saved - options.step;
      const Evaluation minus = loss();
      v = saved;
      if (plus.signature != base || minus.signature != base) {
        ++report.skipped;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * options.step);
      report.max_rel_error =
          std::max(report.max_rel_error, relative_error(target.analytic[i], numeric, options.floor));
      ++report.checked;
    }
  }
  return reports;
}

nn::ModelConfig tiny_config() {
  nn::ModelConfig c;
  c.persons = 2;
  c.joints = 3;
  c.objects = 0;
  c.frames = 4;
  c.coord_channels = 3;
  c.num_classes = 4;
  c.layout = graph::Layout::Chain;
  c.inter = graph::InterVariant::Pairwise;
  c.input_channels = {16, 16, 8};
  c.main_channels = {32, 32, 32, 64, 64, 64};
  c.stride_blocks = {3};
  c.reduction = 4;
  return c;
}

std::vector<Report> run_suite(std::uint64_t seed, const Options& options) {
  std::mt19937_64 rng(seed);
  std::vector<Report> all;
  auto append = [&all](std::vector<Report> r) { all.insert(all.end(), r.begin(), r.end()); };

  // Shared layer-check graph: M=2 persons, 3-joint chain plus one object keypoint.
  const std::size_t M = 2, J = 4, N = M * J, B = 2, T = 5;
  auto body = graph::attach_objects(graph::make_body(graph::Layout::Chain, 3), 1, {{0, 2}});
  auto adjacency = std::make_shared<graph::PartitionedAdjacency>(
      graph::partition_and_normalize(graph::make_panoramic(body, M, graph::InterVariant::Pairwise)));

  {
    nn::SpatialGraphConv sgc("sgc", 3, 4, adjacency);
    nn::ParamRefs refs;
    sgc.collect(refs);
    randomize(refs.params, rng);
    Tensor x = random_tensor({B, 3, T, N}, rng);
    append(probe_layer(
        "sgc", x, refs, [&](const Tensor& in) { return sgc.forward(in); },
        [&](const Tensor& g) { return sgc.backward(g); }, kSmooth, rng, options));
  }
  {
    nn::MultiScaleTcn tcn("tcn", 4, 8, 2);
    nn::ParamRefs refs;
    tcn.collect(refs);
    randomize(refs.params, rng);
    Tensor x = random_tensor({B, 4, T, N}, rng);
    append(probe_layer(
        "tcn", x, refs, [&](const Tensor& in) { return tcn.forward(in, nn::Mode::Train); },
        [&](const Tensor& g) { return tcn.backward(g); }, [&](nn::Signature& s) { tcn.fold(s); }, rng, options,
        tcn_group));
  }
  {
    nn::PersonAttention att("attention", 8, M, J, 4);
    nn::ParamRefs refs;
    att.collect(refs);
    randomize(refs.params, rng);
    Tensor x = random_tensor({B, 8, T, N}, rng);
    append(probe_layer(
        "attention", x, refs, [&](const Tensor& in) { return att.forward(in); },
        [&](const Tensor& g) { return att.backward(g); }, [&](nn::Signature& s) { att.fold(s); }, rng, options));
  }
  {
    nn::BatchNorm bn("batchnorm", 3);
    nn::ParamRefs refs;
    bn.collect(refs);
    randomize(refs.params, rng);
    Tensor x = random_tensor({B, 3, T, N}, rng, 2.0);
    append(probe_layer(
        "batchnorm", x, refs, [&](const Tensor& in) { return bn.forward(in, nn::Mode::Train); },
        [&](const Tensor& g) { return bn.backward(g); }, kSmooth, rng, options));
  }
  {
    nn::Classifier fc("classifier", 6, 5);
    nn::ParamRefs refs;
    fc.collect(refs);
    randomize(refs.params, rng);
    Tensor x = random_tensor({B, 6, T, N}, rng);
    const std::vector<std::size_t> labels = {1, 3};
    for (nn::Param* p : refs.params) p->grad.zero();
    const auto result = nn::cross_entropy(fc.forward(x), labels);
    const Tensor dx = fc.backward(result.grad);
    auto targets = param_targets(refs, "classifier");
    targets.push_back({"classifier.input", &x, dx, {}});
    auto loss = [&] { return Evaluation{nn::cross_entropy(fc.forward(x), labels).loss, 0}; };
    append(check_targets(loss, targets, options));
  }
  {
    nn::BasicBlock block("block", {4, 8, 2, M, J, 4}, adjacency);
    nn::ParamRefs refs;
    block.collect(refs);
    randomize(refs.params, rng);
    Tensor x = random_tensor({B, 4, T, N}, rng);
    append(probe_layer(
        "block", x, refs, [&](const Tensor& in) { return block.forward(in, nn::Mode::Train); },
        [&](const Tensor& g) { return block.backward(g); }, [&](nn::Signature& s) { block.fold(s); }, rng,
        options));
  }
  {
    nn::Model model(tiny_config());
    model.initialize(rng());
    const auto& refs = model.refs();
    randomize(refs.params, rng);
    const auto& cfg = model.config();
    nn::StreamBatch inputs;
    for (std::size_t s = 0; s < cfg.enabled_streams(); ++s) {
      inputs.push_back(random_tensor({1, cfg.stream_channels(), cfg.frames, cfg.num_nodes()}, rng));
    }
    const std::vector<std::size_t> labels = {static_cast<std::size_t>(rng() % cfg.num_classes)};
    model.zero_grad();
    const auto result = nn::cross_entropy(model.forward(inputs, nn::Mode::Train), labels);
    model.backward(result.grad);
    std::vector<Target> targets;
    for (nn::Param* p : refs.params) {
      targets.push_back({"model", &p->value, p->grad, sample_entries(p->grad, options.model_entries_per_tensor, rng)});
    }
    auto loss = [&] {
      const double value = nn::cross_entropy(model.forward(inputs, nn::Mode::Train), labels).loss;
      return Evaluation{value, model.signature()};
    };
    append(check_targets(loss, targets, options));
  }
  return all;
}

std::vector<Report> run_seeds(const std::vector<std::uint64_t>& seeds, const Options& options) {
  std::vector<Report> merged;
  std::map<std::string, std::size_t> index;
  for (std::uint64_t seed : seeds) {
    for (const Report& r : run_suite(seed, options)) {
      auto [it, inserted] = index.try_emplace(r.name, merged.size());
      if (inserted) merged.push_back({r.name, 0.0, 0, 0});
      Report& m = merged[it->second];
      m.max_rel_error = std::max(m.max_rel_error, r.max_rel_error);
      m.checked += r.checked;
      m.skipped += r.skipped;
    }
  }
  return merged;
}

}  // namespace panograph::gradcheck
