#pragma once

#include <cstddef>
#include <vector>

namespace laplace {

/// Stopping controls shared by both EM estimators.
struct EmConfig {
  /// Stop once the log-likelihood gains less than this in one iteration.
  double epsilon = 1e-11;
  std::size_t max_iterations = 5000;
  /// Quadratic forms below this are floored before Bessel evaluation.
  double q_floor = 1e-12;
  /// When positive, convergence additionally requires the relative change of
  /// the scale estimate in the last iteration to fall below this. Zero keeps
  /// the pure log-likelihood rule.
  double step_tolerance = 0.0;

  void validate() const;
  bool stop(double gain, double relative_step) const;
};

struct EmReport {
  std::size_t iterations = 0;
  double final_log_likelihood = 0.0;
  /// trace[0] is the log-likelihood of the initial value, trace[k] after
  /// iteration k.
  std::vector<double> trace;
  bool converged = false;
};

}  // namespace laplace
