#pragma once

// Central finite-difference checks of every hand-written backward pass.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "panograph/nn/model.hpp"
#include "panograph/tensor.hpp"

namespace panograph::gradcheck {

struct Options {
  double step = 1e-5;
  /// Denominator floor of the relative error. Gradients below it are compared
  /// absolutely (|a - n| < tolerance * floor); the composed model's forward pass
  /// carries ~4e-9 of finite-difference round-off on analytically zero gradients.
  double floor = 1e-4;
  /// Composed-model check: per tensor, this many uniformly drawn entries plus the
  /// same number drawn among entries with a nonzero analytic gradient.
  std::size_t model_entries_per_tensor = 1;
};

struct Report {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // probes whose +/- step crossed a ReLU or max-pool kink
};

/// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

/// One tensor to probe: `value` is perturbed in place, `analytic` holds the gradient to compare.
struct Target {
  std::string group;
  Tensor* value;
  Tensor analytic;
  std::vector<std::size_t> entries;  // empty = all entries
};

struct Evaluation {
  double loss = 0.0;
  std::uint64_t signature = 0;  // piecewise-decision digest, see nn::Signature
};

/// Perturbs every selected entry by +/- step, re-evaluates `loss`, and folds the
/// worst relative error per group into the returned reports (in first-seen order).
/// Probes whose perturbed evaluations change the signature are non-differentiable
/// within the step and are counted as skipped instead of compared.
std::vector<Report> check_targets(const std::function<Evaluation()>& loss, std::vector<Target>& targets,
                                  const Options& options);

/// Tiny composed model: M=2, V=3 chain, n=0, T=4, channels shrunk 4x.
nn::ModelConfig tiny_config();

/// SGC, each TCN branch, attention, batch norm, classifier + loss, one basic block,
/// and the composed tiny model, for one seed.
std::vector<Report> run_suite(std::uint64_t seed, const Options& options = {});

/// Worst error per report name across several seeds.
std::vector<Report> run_seeds(const std::vector<std::uint64_t>& seeds, const Options& options = {});

}  // namespace panograph::gradcheck
