#include "laplace/error.hpp"

namespace laplace {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::dimension_overflow: return "DimensionOverflow";
    case Errc::not_symmetric: return "NotSymmetric";
    case Errc::not_positive_definite: return "NotPositiveDefinite";
    case Errc::non_positive_argument: return "NonPositiveArgument";
    case Errc::existence_violation: return "ExistenceViolation";
    case Errc::singular_initial: return "SingularInitial";
    case Errc::non_finite: return "NonFinite";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::empty_input: return "EmptyInput";
    case Errc::parse: return "ParseError";
    case Errc::io: return "IOError";
  }
  return "Error";
}

}  // namespace laplace
