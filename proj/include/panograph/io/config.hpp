#pragma once

// Flat "key = value" configuration files. Lines starting with '#' are comments;
// unknown or repeated keys are errors.
//
//   model.persons = 3
//   model.main_channels = 32,32,32,64,64,64
//   model.attachments = 0:4          # object slot : joint
//   train.base_lr = 0.1

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "panograph/nn/model.hpp"
#include "panograph/train.hpp"

namespace panograph::io {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Throws ConfigError "<source>:<line>: ..." on syntax errors and repeated keys.
KeyValues parse_key_values(std::string_view text, const std::string& source);

struct RunConfig {
  nn::ModelConfig model;
  train::TrainConfig train;
};

/// Starts from `defaults` and overrides every key present. Keys outside the
/// `model.` / `train.` namespaces (or `model.` only, when `model_only`) are rejected.
RunConfig parse_run_config(std::string_view text, const std::string& source, const RunConfig& defaults = {},
                           bool model_only = false);
RunConfig load_run_config(const std::string& path, const RunConfig& defaults = {});

std::string format_model_config(const nn::ModelConfig& config);
std::string format_train_config(const train::TrainConfig& config);
std::string format_run_config(const RunConfig& config);

/// Small-model defaults used for synthetic data (chain body, shrunk channels).
RunConfig synthetic_run_config();

}  // namespace panograph::io
