#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "laplace/bessel.hpp"
#include "laplace/em.hpp"
#include "laplace/matrix.hpp"

namespace laplace {

inline constexpr double kDefaultQFloor = 1e-12;

/// p-dimensional symmetric Laplace distribution SL_p(Sigma), zero location.
class MvslModel {
 public:
  explicit MvslModel(SpdMatrix sigma);

  Eigen::Index p() const noexcept { return sigma_.dim(); }
  const SpdMatrix& sigma() const noexcept { return sigma_; }
  /// nu = (2 - p) / 2
  BesselOrder nu() const noexcept { return nu_; }

 private:
  SpdMatrix sigma_;
  BesselOrder nu_;
};

/// N observations of dimension p, one per row.
class MvslSample {
 public:
  explicit MvslSample(DenseMatrix observations);

  Eigen::Index n() const noexcept { return data_.rows(); }
  Eigen::Index p() const noexcept { return data_.cols(); }
  const DenseMatrix& observations() const noexcept { return data_; }
  Vector observation(Eigen::Index i) const { return data_.eigen().row(i).transpose(); }

 private:
  DenseMatrix data_;
};

struct MvslFit {
  SpdMatrix sigma;
  EmReport report;
};

/// Log density. For p >= 2 an observation whose quadratic form is below
/// q_floor sits on the density pole and yields +infinity; for p = 1 the
/// exact finite value is returned.
double mvsl_log_pdf(const MvslModel& model, const Vector& y, double q_floor = kDefaultQFloor);

/// Y_i = sqrt(W_i) L g_i with W_i ~ Exp(1), g_i ~ N(0, I). Deterministic in seed.
MvslSample mvsl_sample(const SpdMatrix& sigma, std::size_t n, std::uint64_t seed);

/// E(1/W | Y = y) = (Q/2)^{-1/2} K_{nu-1}(sqrt(2Q)) / K_nu(sqrt(2Q)),
/// Q = max(y' Sigma^{-1} y, q_floor).
double mvsl_weight(const MvslModel& model, const Vector& y, double q_floor = kDefaultQFloor);

/// Weights for every observation under the given scale.
Vector mvsl_weights(const MvslModel& model, const MvslSample& data,
                    double q_floor = kDefaultQFloor);

/// (1/N) sum_i v_i Y_i Y_i'.
DenseMatrix mvsl_weighted_scatter(const MvslSample& data, const Vector& weights);

/// Exact log-likelihood (full density constant), quadratic forms floored at
/// q_floor. Throws NonFinite naming the first offending observation.
double mvsl_log_likelihood(const SpdMatrix& sigma, const MvslSample& data,
                           double q_floor = kDefaultQFloor);

/// Throws ExistenceViolation unless n >= p.
void check_mvsl_existence(Eigen::Index n, Eigen::Index p);

/// (1/N) sum_i Y_i Y_i'. Throws SingularInitial if not positive definite.
SpdMatrix mvsl_default_initial(const MvslSample& data);

/// EM maximum-likelihood fit of Sigma. Iterates the weight/scatter update
/// until the log-likelihood gains less than config.epsilon, or
/// config.max_iterations is reached (converged = false, not an error).
MvslFit mvsl_em_fit(const MvslSample& data, const EmConfig& config = {},
                    const std::optional<SpdMatrix>& initial = std::nullopt);

/// (1/(N-1)) sum_i (Y_i - Ybar)(Y_i - Ybar)'. May be singular when N <= p.
/// Throws InsufficientData for N < 2.
DenseMatrix mvsl_sample_covariance(const MvslSample& data);

/// The sample covariance as a scale estimate; throws NotPositiveDefinite
/// when it is singular.
SpdMatrix mvsl_moment_estimator(const MvslSample& data);

}  // namespace laplace
