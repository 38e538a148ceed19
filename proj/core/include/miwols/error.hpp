#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace miwols {

enum class ErrorCode {
  invalid_input,         // malformed data or configuration
  degenerate_column,     // partially observed column without observed entries
  rank_deficient,        // collinear design columns
  degenerate_treatment,  // treatment vector is constant
  separation,            // logistic fit diverged or hit the coefficient bound
  singular_system,       // estimating equations cannot be solved
  non_invertible_sensitivity,
  not_positive_semidefinite,
};

std::string_view to_string(ErrorCode code);

/// Exception type thrown by every fallible operation in the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for errors raised while fitting a model (as opposed to bad input).
  bool is_fitting_error() const noexcept {
    return code_ != ErrorCode::invalid_input;
  }

 private:
  ErrorCode code_;
};

}  // namespace miwols
