#pragma once

#include <stdexcept>

namespace snnkit {

// Shape disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Value outside the operation's admissible range (labels, timesteps, ratios).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Object used against a stale or mismatching counterpart (trace vs. net,
// params vs. grads, exhausted prune pool).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed on-disk artifact (IDX files, checkpoints, configs).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace snnkit
