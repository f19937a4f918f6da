#include "laplace/em.hpp"

#include <cmath>

#include "laplace/error.hpp"

namespace laplace {

void EmConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(Errc::invalid_argument, "epsilon must be positive");
  }
  if (max_iterations < 1) {
    throw Error(Errc::invalid_argument, "max_iterations must be at least 1");
  }
  if (!(q_floor > 0.0) || !std::isfinite(q_floor)) {
    throw Error(Errc::invalid_argument, "q_floor must be positive");
  }
  if (!(step_tolerance >= 0.0) || !std::isfinite(step_tolerance)) {
    throw Error(Errc::invalid_argument, "step_tolerance must be nonnegative");
  }
}

bool EmConfig::stop(double gain, double relative_step) const {
  if (!(gain < epsilon)) return false;
  return step_tolerance == 0.0 || relative_step < step_tolerance;
}

}  // namespace laplace
