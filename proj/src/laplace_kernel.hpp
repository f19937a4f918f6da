#pragma once

// Density and weight terms shared by the vector and matrix variate models.
// Both reduce to a function of the quadratic form Q, the total dimension d
// and log|Sigma| of the full (possibly Kronecker) scale.

#include <cmath>
#include <limits>
#include <numbers>

#include "laplace/bessel.hpp"

namespace laplace::detail {

enum class Pole { infinite, floored };

struct Term {
  double log_density;
  double weight;
};

inline double log_normalizer(double dim, double log_det) {
  return std::numbers::ln2 - 0.5 * dim * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
}

// log f and E(1/W | data) for one observation with quadratic form q.
inline Term laplace_term(double q, int dim, double log_det, double q_floor, Pole pole) {
  const BesselOrder nu{2 - dim};
  if (dim == 1 && q < q_floor) {
    // K_{1/2} closed form, finite at the origin.
    const double qf = std::max(q, q_floor);
    return Term{-0.5 * std::numbers::ln2 - 0.5 * log_det - std::sqrt(2.0 * q),
                std::sqrt(2.0 / qf)};
  }
  if (q < q_floor && pole == Pole::infinite) {
    return Term{std::numeric_limits<double>::infinity(), std::sqrt(2.0 / q_floor) *
                    bessel_k_ratio(nu, std::sqrt(2.0 * q_floor))};
  }
  const double qf = std::max(q, q_floor);
  const BesselLogRatio k = bessel_k_log_and_ratio(nu, std::sqrt(2.0 * qf));
  const double log_density =
      log_normalizer(dim, log_det) + 0.25 * nu.two_nu * std::log(0.5 * qf) + k.log_k;
  return Term{log_density, std::sqrt(2.0 / qf) * k.ratio};
}

}  // namespace laplace::detail
