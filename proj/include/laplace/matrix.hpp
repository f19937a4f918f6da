#pragma once

#include <cstddef>
#include <initializer_list>

#include <Eigen/Dense>

namespace laplace {

/// Row-major dense storage shared by every module.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Real matrix with explicit shape. Entries are finite; the constructor
/// rejects NaN and infinities. Immutable once built.
class DenseMatrix {
 public:
  /// rows x cols zero matrix.
  DenseMatrix(Eigen::Index rows, Eigen::Index cols);
  explicit DenseMatrix(RowMatrix values);

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(Eigen::Index n);
  static DenseMatrix column(const Vector& v);
  static DenseMatrix diagonal(std::initializer_list<double> diag);

  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  bool is_square() const noexcept { return rows() == cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

  const RowMatrix& eigen() const noexcept { return values_; }

  DenseMatrix transpose() const;

 private:
  RowMatrix values_;
};

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

/// Symmetric positive-definite matrix together with its lower Cholesky
/// factor. Only cholesky() creates one, so the factor is always valid.
class SpdMatrix {
 public:
  Eigen::Index dim() const noexcept { return matrix_.rows(); }
  const DenseMatrix& matrix() const noexcept { return matrix_; }
  const RowMatrix& lower() const noexcept { return lower_; }
  double log_det() const noexcept { return log_det_; }
  double trace() const { return matrix_.eigen().trace(); }

  /// Sigma^{-1} b via forward and back substitution.
  Vector solve(const Vector& b) const;
  /// y' Sigma^{-1} y = |L^{-1} y|^2.
  double quadratic_form(const Vector& y) const;
  /// L^{-1} B, column by column.
  RowMatrix solve_lower(const RowMatrix& b) const;

  /// a * Sigma, reusing the factor (a > 0).
  SpdMatrix scaled(double a) const;

 private:
  friend SpdMatrix cholesky(const DenseMatrix& m);
  SpdMatrix(DenseMatrix matrix, RowMatrix lower, double log_det);

  DenseMatrix matrix_;
  RowMatrix lower_;
  double log_det_;
};

/// Relative tolerance for symmetry checks, measured against |m|_F.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Factor a symmetric matrix. Throws NotSymmetric when |m - m'|_F exceeds
/// 1e-10 |m|_F and NotPositiveDefinite when a pivot falls at or below
/// dim * eps * max(diag). The stored matrix is the symmetric part of m.
SpdMatrix cholesky(const DenseMatrix& m);

DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b);

/// Column-wise vectorization: (rows*cols) x 1.
DenseMatrix vec(const DenseMatrix& m);
Vector vec_eigen(const RowMatrix& m);

/// tr(s2^{-1} x' s1^{-1} x) for a p x q matrix x, via triangular solves
/// against both factors.
double trace_quadratic_form(const DenseMatrix& x, const SpdMatrix& s1, const SpdMatrix& s2);
double trace_quadratic_form(const RowMatrix& x, const SpdMatrix& s1, const SpdMatrix& s2);

double frobenius_norm(const DenseMatrix& m);

}  // namespace laplace
