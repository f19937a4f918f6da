#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "laplace/bessel.hpp"
#include "laplace/em.hpp"
#include "laplace/matrix.hpp"
#include "laplace/mvsl.hpp"

namespace laplace {

/// Matrix variate symmetric Laplace MSL_{p,q}(Sigma1, Sigma2): vec(X) is
/// SL_{pq}(Sigma2 (x) Sigma1). Sigma1 scales rows, Sigma2 columns.
class MatslModel {
 public:
  MatslModel(SpdMatrix sigma1, SpdMatrix sigma2);

  Eigen::Index p() const noexcept { return sigma1_.dim(); }
  Eigen::Index q() const noexcept { return sigma2_.dim(); }
  const SpdMatrix& sigma1() const noexcept { return sigma1_; }
  const SpdMatrix& sigma2() const noexcept { return sigma2_; }
  /// nu = (2 - pq) / 2
  BesselOrder nu() const noexcept { return nu_; }
  /// log|Sigma2 (x) Sigma1| = p log|Sigma2| + q log|Sigma1|
  double log_det() const noexcept;

 private:
  SpdMatrix sigma1_;
  SpdMatrix sigma2_;
  BesselOrder nu_;
};

class MatslSample {
 public:
  explicit MatslSample(std::vector<DenseMatrix> observations);

  Eigen::Index n() const noexcept { return static_cast<Eigen::Index>(obs_.size()); }
  Eigen::Index p() const noexcept { return obs_.front().rows(); }
  Eigen::Index q() const noexcept { return obs_.front().cols(); }
  const std::vector<DenseMatrix>& observations() const noexcept { return obs_; }
  const DenseMatrix& operator[](std::size_t i) const { return obs_[i]; }

  /// N x pq sample of vec(X_i).
  MvslSample vectorized() const;

 private:
  std::vector<DenseMatrix> obs_;
};

/// The pair is identified only up to (a Sigma1, Sigma2 / a). The canonical
/// representative has trace(Sigma2) = q; kron is Sigma2 (x) Sigma1.
struct KroneckerEstimate {
  SpdMatrix sigma1_hat;
  SpdMatrix sigma2_hat;
  DenseMatrix kron;
  /// Factor a applied as Sigma2 <- a Sigma2, Sigma1 <- Sigma1 / a.
  double normalization;
};

struct MatslFit {
  KroneckerEstimate estimate;
  EmReport report;
};

double matsl_log_pdf(const MatslModel& model, const DenseMatrix& x,
                     double q_floor = kDefaultQFloor);

/// 1 / (1 + tr(Sigma2 T' Sigma1 T) / 2).
double matsl_char_fn(const MatslModel& model, const DenseMatrix& t);

/// X_i = sqrt(W_i) L1 G_i L2' with G_i a p x q standard normal matrix.
MatslSample matsl_sample(const SpdMatrix& sigma1, const SpdMatrix& sigma2, std::size_t n,
                         std::uint64_t seed);

double matsl_weight(const MatslModel& model, const DenseMatrix& x,
                    double q_floor = kDefaultQFloor);

Vector matsl_weights(const MatslModel& model, const MatslSample& data,
                     double q_floor = kDefaultQFloor);

/// (1/qN) sum_i v_i X_i Sigma2^{-1} X_i'
DenseMatrix matsl_row_update(const MatslSample& data, const Vector& weights,
                             const SpdMatrix& sigma2);
/// (1/pN) sum_i v_i X_i' Sigma1^{-1} X_i
DenseMatrix matsl_column_update(const MatslSample& data, const Vector& weights,
                                const SpdMatrix& sigma1);

double matsl_log_likelihood(const SpdMatrix& sigma1, const SpdMatrix& sigma2,
                            const MatslSample& data, double q_floor = kDefaultQFloor);

/// Throws ExistenceViolation unless N q >= p and N p >= q.
void check_matsl_existence(Eigen::Index n, Eigen::Index p, Eigen::Index q);

/// ((1/qN) sum X_i X_i', (1/pN) sum X_i' X_i). Throws SingularInitial.
std::pair<SpdMatrix, SpdMatrix> matsl_default_initial(const MatslSample& data);

KroneckerEstimate normalize_kronecker_pair(const SpdMatrix& sigma1, const SpdMatrix& sigma2);

/// Flip-flop EM: weights from the previous pair, then the row scale from
/// the previous column scale, then the column scale from the fresh row scale.
/// Both initials must be given together, or neither.
MatslFit matsl_em_fit(const MatslSample& data, const EmConfig& config = {},
                      const std::optional<SpdMatrix>& initial1 = std::nullopt,
                      const std::optional<SpdMatrix>& initial2 = std::nullopt);

}  // namespace laplace
