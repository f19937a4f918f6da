#include "laplace/matsl.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "laplace/error.hpp"
#include "laplace/random.hpp"
#include "laplace_kernel.hpp"

namespace laplace {

namespace {

std::string shape(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void require_shape(const MatslModel& model, const DenseMatrix& x) {
  if (x.rows() != model.p() || x.cols() != model.q()) {
    throw Error(Errc::dimension_mismatch, "observation " + shape(x.rows(), x.cols()) +
                                              " for model " + shape(model.p(), model.q()));
  }
}

void require_shape(const SpdMatrix& s1, const SpdMatrix& s2, const MatslSample& data) {
  if (s1.dim() != data.p() || s2.dim() != data.q()) {
    throw Error(Errc::dimension_mismatch,
                "scales of dim " + std::to_string(s1.dim()) + " and " + std::to_string(s2.dim()) +
                    " for data of shape " + shape(data.p(), data.q()));
  }
}

struct Evaluation {
  double log_likelihood;
  Vector weights;
};

Evaluation evaluate(const MatslModel& model, const MatslSample& data, double q_floor) {
  const int dim = static_cast<int>(data.p() * data.q());
  const double log_det = model.log_det();
  Evaluation out{0.0, Vector(data.n())};
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double q =
        trace_quadratic_form(data[static_cast<std::size_t>(i)].eigen(), model.sigma1(),
                             model.sigma2());
    const detail::Term t = detail::laplace_term(q, dim, log_det, q_floor, detail::Pole::floored);
    if (!std::isfinite(t.log_density) || !std::isfinite(t.weight)) {
      throw Error(Errc::non_finite,
                  "log-likelihood is not finite at observation " + std::to_string(i));
    }
    out.log_likelihood += t.log_density;
    out.weights(i) = t.weight;
  }
  return out;
}

SpdMatrix factor_update(const DenseMatrix& update, std::size_t k, const char* which) {
  try {
    return cholesky(update);
  } catch (const Error& e) {
    throw Error(Errc::non_finite, std::string(which) + " update at iteration " +
                                      std::to_string(k) + " lost positive definiteness (" +
                                      e.what() +
                                      "); the likelihood may be unbounded at this sample size");
  }
}

double relative_change(const SpdMatrix& next, const SpdMatrix& prev) {
  return frobenius_norm(next.matrix() - prev.matrix()) / frobenius_norm(next.matrix());
}

}  // namespace

MatslModel::MatslModel(SpdMatrix sigma1, SpdMatrix sigma2)
    : sigma1_(std::move(sigma1)),
      sigma2_(std::move(sigma2)),
      nu_{2 - static_cast<int>(sigma1_.dim() * sigma2_.dim())} {}

double MatslModel::log_det() const noexcept {
  return static_cast<double>(p()) * sigma2_.log_det() +
         static_cast<double>(q()) * sigma1_.log_det();
}

MatslSample::MatslSample(std::vector<DenseMatrix> observations) : obs_(std::move(observations)) {
  if (obs_.empty()) throw Error(Errc::empty_input, "matrix sample needs at least one observation");
  for (std::size_t i = 1; i < obs_.size(); ++i) {
    if (obs_[i].rows() != p() || obs_[i].cols() != q()) {
      throw Error(Errc::dimension_mismatch, "observation " + std::to_string(i) + " has shape " +
                                                shape(obs_[i].rows(), obs_[i].cols()) +
                                                ", expected " + shape(p(), q()));
    }
  }
}

MvslSample MatslSample::vectorized() const {
  RowMatrix out(n(), p() * q());
  for (Eigen::Index i = 0; i < n(); ++i) {
    out.row(i) = vec_eigen(obs_[static_cast<std::size_t>(i)].eigen()).transpose();
  }
  return MvslSample(DenseMatrix(std::move(out)));
}

double matsl_log_pdf(const MatslModel& model, const DenseMatrix& x, double q_floor) {
  require_shape(model, x);
  const double q = trace_quadratic_form(x, model.sigma1(), model.sigma2());
  return detail::laplace_term(q, static_cast<int>(model.p() * model.q()), model.log_det(),
                              q_floor, detail::Pole::infinite)
      .log_density;
}

double matsl_char_fn(const MatslModel& model, const DenseMatrix& t) {
  require_shape(model, t);
  // tr(S2 T' S1 T) = |L1' T L2|_F^2
  const RowMatrix m = model.sigma1().lower().transpose() * t.eigen() * model.sigma2().lower();
  return 1.0 / (1.0 + 0.5 * m.squaredNorm());
}

MatslSample matsl_sample(const SpdMatrix& sigma1, const SpdMatrix& sigma2, std::size_t n,
                         std::uint64_t seed) {
  if (n == 0) throw Error(Errc::invalid_argument, "sample size must be at least 1");
  Rng rng(seed);
  std::exponential_distribution<double> exponential(1.0);
  std::vector<DenseMatrix> obs;
  obs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = exponential(rng);
    const RowMatrix g = standard_normal(rng, sigma1.dim(), sigma2.dim());
    obs.emplace_back(RowMatrix(std::sqrt(w) * (sigma1.lower() * g * sigma2.lower().transpose())));
  }
  return MatslSample(std::move(obs));
}

double matsl_weight(const MatslModel& model, const DenseMatrix& x, double q_floor) {
  require_shape(model, x);
  const double q = trace_quadratic_form(x, model.sigma1(), model.sigma2());
  return detail::laplace_term(q, static_cast<int>(model.p() * model.q()), model.log_det(),
                              q_floor, detail::Pole::floored)
      .weight;
}

Vector matsl_weights(const MatslModel& model, const MatslSample& data, double q_floor) {
  require_shape(model.sigma1(), model.sigma2(), data);
  Vector w(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    w(i) = matsl_weight(model, data[static_cast<std::size_t>(i)], q_floor);
  }
  return w;
}

DenseMatrix matsl_row_update(const MatslSample& data, const Vector& weights,
                             const SpdMatrix& sigma2) {
  if (weights.size() != data.n()) {
    throw Error(Errc::dimension_mismatch, "one weight per observation required");
  }
  if (sigma2.dim() != data.q()) {
    throw Error(Errc::dimension_mismatch, "column scale does not match data");
  }
  RowMatrix acc = RowMatrix::Zero(data.p(), data.p());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    // X Sigma2^{-1} X' = C C' with C = X L2^{-T}
    const RowMatrix c = sigma2.solve_lower(data[static_cast<std::size_t>(i)].eigen().transpose());
    acc.noalias() += weights(i) * (c.transpose() * c);
  }
  acc /= static_cast<double>(data.q() * data.n());
  return DenseMatrix(RowMatrix(0.5 * (acc + acc.transpose())));
}

DenseMatrix matsl_column_update(const MatslSample& data, const Vector& weights,
                                const SpdMatrix& sigma1) {
  if (weights.size() != data.n()) {
    throw Error(Errc::dimension_mismatch, "one weight per observation required");
  }
  if (sigma1.dim() != data.p()) {
    throw Error(Errc::dimension_mismatch, "row scale does not match data");
  }
  RowMatrix acc = RowMatrix::Zero(data.q(), data.q());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const RowMatrix c = sigma1.solve_lower(data[static_cast<std::size_t>(i)].eigen());
    acc.noalias() += weights(i) * (c.transpose() * c);
  }
  acc /= static_cast<double>(data.p() * data.n());
  return DenseMatrix(RowMatrix(0.5 * (acc + acc.transpose())));
}

double matsl_log_likelihood(const SpdMatrix& sigma1, const SpdMatrix& sigma2,
                            const MatslSample& data, double q_floor) {
  require_shape(sigma1, sigma2, data);
  return evaluate(MatslModel(sigma1, sigma2), data, q_floor).log_likelihood;
}

void check_matsl_existence(Eigen::Index n, Eigen::Index p, Eigen::Index q) {
  if (n * q < p || n * p < q) {
    const Eigen::Index larger = std::max(p, q);
    const Eigen::Index smaller = std::min(p, q);
    const Eigen::Index minimum = (larger + smaller - 1) / smaller;
    throw Error(Errc::existence_violation,
                "maximum likelihood estimate needs N >= max(p/q, q/p) (N = " + std::to_string(n) +
                    ", p = " + std::to_string(p) + ", q = " + std::to_string(q) +
                    ", minimum N = " + std::to_string(minimum) + ")");
  }
}

std::pair<SpdMatrix, SpdMatrix> matsl_default_initial(const MatslSample& data) {
  const Vector ones = Vector::Ones(data.n());
  const SpdMatrix identity_p = cholesky(DenseMatrix::identity(data.p()));
  const SpdMatrix identity_q = cholesky(DenseMatrix::identity(data.q()));
  try {
    return {cholesky(matsl_row_update(data, ones, identity_q)),
            cholesky(matsl_column_update(data, ones, identity_p))};
  } catch (const Error& e) {
    throw Error(Errc::singular_initial,
                std::string("initial scatter matrices are not positive definite (") + e.what() +
                    ")");
  }
}

KroneckerEstimate normalize_kronecker_pair(const SpdMatrix& sigma1, const SpdMatrix& sigma2) {
  const double a = static_cast<double>(sigma2.dim()) / sigma2.trace();
  SpdMatrix s1 = a == 1.0 ? sigma1 : sigma1.scaled(1.0 / a);
  SpdMatrix s2 = a == 1.0 ? sigma2 : sigma2.scaled(a);
  DenseMatrix kron = kronecker(s2.matrix(), s1.matrix());
  return KroneckerEstimate{std::move(s1), std::move(s2), std::move(kron), a};
}

MatslFit matsl_em_fit(const MatslSample& data, const EmConfig& config,
                      const std::optional<SpdMatrix>& initial1,
                      const std::optional<SpdMatrix>& initial2) {
  config.validate();
  check_matsl_existence(data.n(), data.p(), data.q());
  if (initial1.has_value() != initial2.has_value()) {
    throw Error(Errc::invalid_argument, "give both initial scales or neither");
  }
  auto [sigma1, sigma2] =
      initial1 ? std::pair{*initial1, *initial2} : matsl_default_initial(data);
  require_shape(sigma1, sigma2, data);

  EmReport report;
  Evaluation current = evaluate(MatslModel(sigma1, sigma2), data, config.q_floor);
  report.trace.push_back(current.log_likelihood);

  for (std::size_t k = 1; k <= config.max_iterations; ++k) {
    SpdMatrix next1 =
        factor_update(matsl_row_update(data, current.weights, sigma2), k, "row scale");
    SpdMatrix next2 =
        factor_update(matsl_column_update(data, current.weights, next1), k, "column scale");
    const double step = std::max(relative_change(next1, sigma1), relative_change(next2, sigma2));
    sigma1 = std::move(next1);
    sigma2 = std::move(next2);
    Evaluation next = evaluate(MatslModel(sigma1, sigma2), data, config.q_floor);
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
  return MatslFit{normalize_kronecker_pair(sigma1, sigma2), std::move(report)};
}

}  // namespace laplace
