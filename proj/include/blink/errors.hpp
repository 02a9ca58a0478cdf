#pragma once

#include <stdexcept>
#include <string>

namespace blink {

// Failure classes. The CLI maps each class to a stable exit code, so every
// throw site picks the value that matches what went wrong.
enum class Errc {
  // usage / validation
  invalid_scale,
  empty_input,
  threshold_invalid,
  invalid_profile,
  invalid_config,
  zero_actual,
  // data
  malformed_log,
  inconsistent_log,
  degenerate_input,
  model_missing,
  cyclic_dag,
  empty_workload,
  // feasibility
  unbounded,
  infeasible_at_any_scale,
};

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

// Exit codes: 0 success, 2 usage/validation, 3 data error, 4 infeasible/unbounded.
inline int exit_code_for(Errc code) {
  switch (code) {
    case Errc::invalid_scale:
    case Errc::empty_input:
    case Errc::threshold_invalid:
    case Errc::invalid_profile:
    case Errc::invalid_config:
    case Errc::zero_actual:
      return 2;
    case Errc::unbounded:
    case Errc::infeasible_at_any_scale:
      return 4;
    default:
      return 3;
  }
}

}  // namespace blink
