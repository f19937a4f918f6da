#pragma once

// Reference computations for the unit and acceptance tests. Everything here
// goes through a different route from the library: Boost quadrature of the
// integral representations, explicit dense inverses, and Boost's own K_nu.

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <Eigen/Dense>

#include "laplace/matrix.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;

// log of  int_R exp(a u - e^u - c e^{-u}) du  for c > 0. Centred at the
// maximiser and scaled by the curvature there, so the integrand is O(1).
inline double log_laplace_integral(double a, double c) {
  const double w = 0.5 * (a + std::sqrt(a * a + 4.0 * c));
  const double u0 = std::log(w);
  auto g = [&](double u) { return a * u - std::exp(u) - c * std::exp(-u); };
  const double g0 = g(u0);
  const double width = 1.0 / std::sqrt(w + c / w);
  boost::math::quadrature::sinh_sinh<double> integrator(12);
  auto f = [&](double t) {
    const double v = g(u0 + width * t) - g0;
    return v < -745.0 ? 0.0 : std::exp(v);
  };
  const double integral = integrator.integrate(f, 1e-15);
  return g0 + std::log(width * integral);
}

// K_mu(x) = (1/2)(x/2)^mu int_0^inf t^{-mu-1} exp(-t - x^2/(4t)) dt, with t = e^u.
inline double log_bessel_k(double mu, double x) {
  return std::log(0.5) + mu * std::log(0.5 * x) + log_laplace_integral(-mu, 0.25 * x * x);
}

// E(1/W | Q) for the joint density w^{-d/2} exp(-w - Q/(2w)) of a
// d-dimensional observation with quadratic form Q and its mixing variable.
inline double weight(double q, int dim) {
  const double half = 0.5 * dim;
  return std::exp(log_laplace_integral(-half, 0.5 * q) -
                  log_laplace_integral(1.0 - half, 0.5 * q));
}

// Density of SL_d at quadratic form Q with log|Sigma| = log_det, as the
// mixture integral over w.
inline double log_density(double q, int dim, double log_det) {
  return -0.5 * dim * std::log(2.0 * std::numbers::pi) - 0.5 * log_det +
         log_laplace_integral(1.0 - 0.5 * dim, 0.5 * q);
}

inline Matrix dense(const laplace::DenseMatrix& m) { return Matrix(m.eigen()); }

// vec(x)' (S2 (x) S1)^{-1} vec(x) with an explicit inverse of the Kronecker product.
inline double kron_quadratic_form(const Matrix& x, const Matrix& s1, const Matrix& s2) {
  const Eigen::Index p = s1.rows(), q = s2.rows();
  Matrix k(p * q, p * q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < q; ++j) k.block(i * p, j * p, p, p) = s2(i, j) * s1;
  const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  return v.dot(k.inverse() * v);
}

// tr(S2^{-1} X' S1^{-1} X) with explicit inverses.
inline double trace_form(const Matrix& x, const Matrix& s1, const Matrix& s2) {
  return (s2.inverse() * x.transpose() * s1.inverse() * x).trace();
}

// Random SPD matrix with eigenvalues bounded away from zero.
template <typename Rng>
laplace::DenseMatrix random_spd(Rng& rng, Eigen::Index p, double scale = 1.0) {
  std::normal_distribution<double> normal;
  laplace::RowMatrix g(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) g(i, j) = normal(rng);
  laplace::RowMatrix s = g * g.transpose() / static_cast<double>(p);
  s += 0.5 * laplace::RowMatrix::Identity(p, p);
  s = 0.5 * (s + s.transpose()).eval();
  return laplace::DenseMatrix(laplace::RowMatrix(scale * s));
}

template <typename Rng>
laplace::RowMatrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  laplace::RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
  return m;
}

inline double relative_error(double got, double want) {
  return std::abs(got - want) / std::abs(want);
}

}  // namespace oracle
