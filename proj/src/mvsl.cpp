#include "laplace/mvsl.hpp"

#include <cmath>
#include <random>
#include <string>

#include "laplace/error.hpp"
#include "laplace/random.hpp"
#include "laplace_kernel.hpp"

namespace laplace {

namespace {

void require_dim(const MvslModel& model, const Vector& y) {
  if (y.size() != model.p()) {
    throw Error(Errc::dimension_mismatch, "observation of length " + std::to_string(y.size()) +
                                              " for dimension " + std::to_string(model.p()));
  }
}

void require_dim(const SpdMatrix& sigma, const MvslSample& data) {
  if (sigma.dim() != data.p()) {
    throw Error(Errc::dimension_mismatch, "scale of dim " + std::to_string(sigma.dim()) +
                                              " for data of dimension " + std::to_string(data.p()));
  }
}

// Quadratic forms of all observations: column norms of L^{-1} Y'.
Vector quadratic_forms(const SpdMatrix& sigma, const MvslSample& data) {
  RowMatrix whitened = sigma.solve_lower(data.observations().eigen().transpose());
  return whitened.colwise().squaredNorm().transpose();
}

struct Evaluation {
  double log_likelihood;
  Vector weights;
};

Evaluation evaluate(const SpdMatrix& sigma, const MvslSample& data, double q_floor) {
  const Vector q = quadratic_forms(sigma, data);
  const int dim = static_cast<int>(data.p());
  Evaluation out{0.0, Vector(data.n())};
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const detail::Term t =
        detail::laplace_term(q(i), dim, sigma.log_det(), q_floor, detail::Pole::floored);
    if (!std::isfinite(t.log_density) || !std::isfinite(t.weight)) {
      throw Error(Errc::non_finite,
                  "log-likelihood is not finite at observation " + std::to_string(i));
    }
    out.log_likelihood += t.log_density;
    out.weights(i) = t.weight;
  }
  return out;
}

}  // namespace

MvslModel::MvslModel(SpdMatrix sigma)
    : sigma_(std::move(sigma)), nu_{2 - static_cast<int>(sigma_.dim())} {}

MvslSample::MvslSample(DenseMatrix observations) : data_(std::move(observations)) {}

double mvsl_log_pdf(const MvslModel& model, const Vector& y, double q_floor) {
  require_dim(model, y);
  const double q = model.sigma().quadratic_form(y);
  return detail::laplace_term(q, static_cast<int>(model.p()), model.sigma().log_det(), q_floor,
                              detail::Pole::infinite)
      .log_density;
}

MvslSample mvsl_sample(const SpdMatrix& sigma, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::invalid_argument, "sample size must be at least 1");
  Rng rng(seed);
  std::exponential_distribution<double> exponential(1.0);
  const Eigen::Index p = sigma.dim();
  RowMatrix out(static_cast<Eigen::Index>(n), p);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double w = exponential(rng);
    const RowMatrix g = standard_normal(rng, p, 1);
    out.row(i) = (std::sqrt(w) * (sigma.lower() * g)).transpose();
  }
  return MvslSample(DenseMatrix(std::move(out)));
}

double mvsl_weight(const MvslModel& model, const Vector& y, double q_floor) {
  require_dim(model, y);
  const double q = model.sigma().quadratic_form(y);
  return detail::laplace_term(q, static_cast<int>(model.p()), model.sigma().log_det(), q_floor,
                              detail::Pole::floored)
      .weight;
}

Vector mvsl_weights(const MvslModel& model, const MvslSample& data, double q_floor) {
  require_dim(model.sigma(), data);
  const Vector q = quadratic_forms(model.sigma(), data);
  Vector w(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    w(i) = detail::laplace_term(q(i), static_cast<int>(model.p()), model.sigma().log_det(),
                                q_floor, detail::Pole::floored)
               .weight;
  }
  return w;
}

DenseMatrix mvsl_weighted_scatter(const MvslSample& data, const Vector& weights) {
  if (weights.size() != data.n()) {
    throw Error(Errc::dimension_mismatch, "one weight per observation required");
  }
  const RowMatrix& y = data.observations().eigen();
  RowMatrix scatter = y.transpose() * weights.asDiagonal() * y;
  scatter /= static_cast<double>(data.n());
  return DenseMatrix(RowMatrix(0.5 * (scatter + scatter.transpose())));
}

double mvsl_log_likelihood(const SpdMatrix& sigma, const MvslSample& data, double q_floor) {
  require_dim(sigma, data);
  return evaluate(sigma, data, q_floor).log_likelihood;
}

void check_mvsl_existence(Eigen::Index n, Eigen::Index p) {
  if (n < p) {
    throw Error(Errc::existence_violation, "maximum likelihood estimate needs N >= p (N = " +
                                               std::to_string(n) + ", p = " + std::to_string(p) +
                                               ", minimum N = " + std::to_string(p) + ")");
  }
}

SpdMatrix mvsl_default_initial(const MvslSample& data) {
  const Vector ones = Vector::Ones(data.n());
  try {
    return cholesky(mvsl_weighted_scatter(data, ones));
  } catch (const Error& e) {
    throw Error(Errc::singular_initial,
                std::string("initial scatter matrix is not positive definite (") + e.what() + ")");
  }
}

MvslFit mvsl_em_fit(const MvslSample& data, const EmConfig& config,
                    const std::optional<SpdMatrix>& initial) {
  config.validate();
  check_mvsl_existence(data.n(), data.p());
  SpdMatrix sigma = initial ? *initial : mvsl_default_initial(data);
  require_dim(sigma, data);

  EmReport report;
  Evaluation current = evaluate(sigma, data, config.q_floor);
  report.trace.push_back(current.log_likelihood);

  for (std::size_t k = 1; k <= config.max_iterations; ++k) {
    const DenseMatrix update = mvsl_weighted_scatter(data, current.weights);
    const double step =
        frobenius_norm(update - sigma.matrix()) / frobenius_norm(update);
    try {
      sigma = cholesky(update);
    } catch (const Error& e) {
      throw Error(Errc::non_finite, "EM update at iteration " + std::to_string(k) +
                                        " lost positive definiteness (" + e.what() + ")");
    }
    Evaluation next = evaluate(sigma, data, config.q_floor);
    const double gain = next.log_likelihood - current.log_likelihood;
    report.trace.push_back(next.log_likelihood);
    report.iterations = k;
    current = std::move(next);
    if (config.stop(gain, step)) {
      report.converged = true;
      break;
    }
  }
  report.final_log_likelihood = current.log_likelihood;
  return MvslFit{std::move(sigma), std::move(report)};
}

DenseMatrix mvsl_sample_covariance(const MvslSample& data) {
  if (data.n() < 2) {
    throw Error(Errc::insufficient_data, "sample covariance needs N >= 2");
  }
  const RowMatrix& y = data.observations().eigen();
  const Eigen::RowVectorXd mean = y.colwise().mean();
  const RowMatrix centered = y.rowwise() - mean;
  RowMatrix cov = centered.transpose() * centered / static_cast<double>(data.n() - 1);
  return DenseMatrix(RowMatrix(0.5 * (cov + cov.transpose())));
}

SpdMatrix mvsl_moment_estimator(const MvslSample& data) {
  return cholesky(mvsl_sample_covariance(data));
}

}  // namespace laplace
