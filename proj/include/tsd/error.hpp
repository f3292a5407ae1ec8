#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsd {

enum class Errc {
  all_zero_cross_matrix,
  non_finite,
  zero_cross,
  zero_background,
  not_hermitian,
  not_psd,
  dimension_mismatch,
  insufficient_clicks,
  zero_trace,
  all_zero,
  bad_partition,
  invalid_argument,
  parse_error,
  validation_error,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure in the library surfaces as this exception; `code()` names the
/// contract that was violated so callers (and tests) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tsd
