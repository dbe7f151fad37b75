#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace probhar {

enum class ErrorKind {
  malformed_code,
  constraint_violation,
  schema_mismatch,
  no_prob_key,
  cycle_detected,
  unknown_input,
  unknown_view,
  io_error,
  empty_input,
  unknown_property,
  empty_training_set,
  gap_in_tiling,
  instance_mismatch,
  invalid_config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::malformed_code: return "malformed-code";
    case ErrorKind::constraint_violation: return "constraint-violation";
    case ErrorKind::schema_mismatch: return "schema-mismatch";
    case ErrorKind::no_prob_key: return "no-prob-key";
    case ErrorKind::cycle_detected: return "cycle-detected";
    case ErrorKind::unknown_input: return "unknown-input";
    case ErrorKind::unknown_view: return "unknown-view";
    case ErrorKind::io_error: return "io-error";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::unknown_property: return "unknown-property";
    case ErrorKind::empty_training_set: return "empty-training-set";
    case ErrorKind::gap_in_tiling: return "gap-in-tiling";
    case ErrorKind::instance_mismatch: return "instance-mismatch";
    case ErrorKind::invalid_config: return "invalid-config";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (the CLI, the HTTP layer) can map it to an exit code or status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace probhar
