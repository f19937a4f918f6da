#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace laplace {

enum class Errc {
  invalid_argument,
  dimension_mismatch,
  dimension_overflow,
  not_symmetric,
  not_positive_definite,
  non_positive_argument,
  existence_violation,
  singular_initial,
  non_finite,
  insufficient_data,
  empty_input,
  parse,
  io,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// front ends can map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by bessel_k when K_nu(x) is smaller than the least positive normal
/// double. Not an Error: the value exists, it just is not representable.
class Underflow : public std::underflow_error {
 public:
  using std::underflow_error::underflow_error;
};

}  // namespace laplace
