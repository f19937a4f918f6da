#include "laplace/matrix.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "laplace/error.hpp"

namespace laplace {

namespace {

std::string shape(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Errc::dimension_mismatch, std::string(op) + " of " + shape(a.rows(), a.cols()) +
                                              " and " + shape(b.rows(), b.cols()));
  }
}

Eigen::Index checked_mul(Eigen::Index a, Eigen::Index b) {
  Eigen::Index out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw Error(Errc::dimension_overflow,
                "product dimension " + std::to_string(a) + "*" + std::to_string(b) + " overflows");
  }
  return out;
}

}  // namespace

DenseMatrix::DenseMatrix(Eigen::Index rows, Eigen::Index cols) {
  if (rows <= 0 || cols <= 0) {
    throw Error(Errc::invalid_argument, "matrix shape must be positive, got " + shape(rows, cols));
  }
  values_ = RowMatrix::Zero(rows, cols);
}

DenseMatrix::DenseMatrix(RowMatrix values) : values_(std::move(values)) {
  if (values_.rows() <= 0 || values_.cols() <= 0) {
    throw Error(Errc::invalid_argument,
                "matrix shape must be positive, got " + shape(values_.rows(), values_.cols()));
  }
  if (!values_.allFinite()) {
    throw Error(Errc::non_finite, "matrix entries must be finite");
  }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r > 0 ? static_cast<Eigen::Index>(rows.begin()->size()) : 0;
  RowMatrix m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Eigen::Index>(row.size()) != c) {
      throw Error(Errc::dimension_mismatch, "ragged row " + std::to_string(i));
    }
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return DenseMatrix(std::move(m));
}

DenseMatrix DenseMatrix::identity(Eigen::Index n) {
  return DenseMatrix(RowMatrix::Identity(n, n));
}

DenseMatrix DenseMatrix::column(const Vector& v) {
  return DenseMatrix(RowMatrix(v));
}

DenseMatrix DenseMatrix::diagonal(std::initializer_list<double> diag) {
  const auto n = static_cast<Eigen::Index>(diag.size());
  RowMatrix m = RowMatrix::Zero(n, n);
  Eigen::Index i = 0;
  for (double v : diag) {
    m(i, i) = v;
    ++i;
  }
  return DenseMatrix(std::move(m));
}

DenseMatrix DenseMatrix::transpose() const {
  return DenseMatrix(RowMatrix(values_.transpose()));
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "sum");
  return DenseMatrix(RowMatrix(a.eigen() + b.eigen()));
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "difference");
  return DenseMatrix(RowMatrix(a.eigen() - b.eigen()));
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(Errc::dimension_mismatch,
                "product of " + shape(a.rows(), a.cols()) + " and " + shape(b.rows(), b.cols()));
  }
  return DenseMatrix(RowMatrix(a.eigen() * b.eigen()));
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  return DenseMatrix(RowMatrix(s * a.eigen()));
}

SpdMatrix::SpdMatrix(DenseMatrix matrix, RowMatrix lower, double log_det)
    : matrix_(std::move(matrix)), lower_(std::move(lower)), log_det_(log_det) {}

Vector SpdMatrix::solve(const Vector& b) const {
  if (b.size() != dim()) {
    throw Error(Errc::dimension_mismatch, "solve with vector of length " + std::to_string(b.size()) +
                                              " against dim " + std::to_string(dim()));
  }
  Vector y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

double SpdMatrix::quadratic_form(const Vector& y) const {
  if (y.size() != dim()) {
    throw Error(Errc::dimension_mismatch, "quadratic form with vector of length " +
                                              std::to_string(y.size()) + " against dim " +
                                              std::to_string(dim()));
  }
  return lower_.triangularView<Eigen::Lower>().solve(y).squaredNorm();
}

RowMatrix SpdMatrix::solve_lower(const RowMatrix& b) const {
  if (b.rows() != dim()) {
    throw Error(Errc::dimension_mismatch, "triangular solve with " + shape(b.rows(), b.cols()) +
                                              " against dim " + std::to_string(dim()));
  }
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

SpdMatrix SpdMatrix::scaled(double a) const {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw Error(Errc::invalid_argument, "scale factor must be positive and finite");
  }
  return SpdMatrix(a * matrix_, std::sqrt(a) * lower_,
                   log_det_ + static_cast<double>(dim()) * std::log(a));
}

SpdMatrix cholesky(const DenseMatrix& m) {
  if (!m.is_square()) {
    throw Error(Errc::dimension_mismatch, "cholesky of non-square " + shape(m.rows(), m.cols()));
  }
  const RowMatrix& a = m.eigen();
  const double norm = a.norm();
  if ((a - a.transpose()).norm() > kSymmetryTolerance * norm) {
    throw Error(Errc::not_symmetric, "matrix is not symmetric within tolerance");
  }
  RowMatrix sym = 0.5 * (a + a.transpose());

  const Eigen::Index n = sym.rows();
  const double max_diag = sym.diagonal().maxCoeff();
  const double cutoff =
      static_cast<double>(n) * std::numeric_limits<double>::epsilon() * std::max(max_diag, 0.0);

  RowMatrix lower = RowMatrix::Zero(n, n);
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = sym(j, j) - lower.row(j).head(j).squaredNorm();
    if (!(pivot > cutoff)) {
      throw Error(Errc::not_positive_definite,
                  "pivot " + std::to_string(j) + " is " + std::to_string(pivot));
    }
    const double ljj = std::sqrt(pivot);
    lower(j, j) = ljj;
    log_det += 2.0 * std::log(ljj);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      lower(i, j) = (sym(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / ljj;
    }
  }
  return SpdMatrix(DenseMatrix(std::move(sym)), std::move(lower), log_det);
}

DenseMatrix kronecker(const DenseMatrix& a, const DenseMatrix& b) {
  const Eigen::Index rows = checked_mul(a.rows(), b.rows());
  const Eigen::Index cols = checked_mul(a.cols(), b.cols());
  RowMatrix out(rows, cols);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b.eigen();
    }
  }
  return DenseMatrix(std::move(out));
}

Vector vec_eigen(const RowMatrix& m) {
  Vector out(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(k++) = m(i, j);
  }
  return out;
}

DenseMatrix vec(const DenseMatrix& m) {
  return DenseMatrix::column(vec_eigen(m.eigen()));
}

double trace_quadratic_form(const RowMatrix& x, const SpdMatrix& s1, const SpdMatrix& s2) {
  if (x.rows() != s1.dim() || x.cols() != s2.dim()) {
    throw Error(Errc::dimension_mismatch, "trace form of " + shape(x.rows(), x.cols()) +
                                              " with scales of dim " + std::to_string(s1.dim()) +
                                              " and " + std::to_string(s2.dim()));
  }
  // |L1^{-1} x L2^{-T}|_F^2
  RowMatrix left = s1.solve_lower(x);
  RowMatrix both = s2.solve_lower(left.transpose());
  return both.squaredNorm();
}

double trace_quadratic_form(const DenseMatrix& x, const SpdMatrix& s1, const SpdMatrix& s2) {
  return trace_quadratic_form(x.eigen(), s1, s2);
}

double frobenius_norm(const DenseMatrix& m) {
  return m.eigen().norm();
}

}  // namespace laplace
