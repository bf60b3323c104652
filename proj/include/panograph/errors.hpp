#pragma once

#include <stdexcept>
#include <string>

namespace panograph {

/// Invalid configuration: unknown layouts, out-of-range attachments, bad keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary container or JSONL format violations.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a shape or precondition contract.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure during optimization (non-finite gradients).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace panograph
