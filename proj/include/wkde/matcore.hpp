#pragma once

#include "errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace wkde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
//! Half-vectorization (X11, X12, X22, X13, ..., Xdd).
using HalfVec = Eigen::VectorXd;

//! r(d) = d(d+1)/2
inline int half_dim(int d)
{
  return d * (d + 1) / 2;
}

//! Inverse of half_dim; throws if r is not triangular.
inline int dim_from_half(std::size_t r)
{
  int d = 0;
  while (static_cast<std::size_t>(half_dim(d)) < r)
    ++d;
  if (r == 0 || static_cast<std::size_t>(half_dim(d)) != r)
    throw dimension_error("length " + std::to_string(r) +
                          " is not a triangular number");
  return d;
}

//! Symmetric matrix, symmetrized on construction.
class SymMatrix
{
public:
  SymMatrix() = default;

  explicit SymMatrix(const Matrix& a)
  {
    if (a.rows() != a.cols() || a.rows() < 1)
      throw dimension_error("SymMatrix needs a non-empty square matrix");
    if (!a.allFinite())
      throw numeric_error("SymMatrix entries must be finite");
    a_ = 0.5 * (a + a.transpose());
  }

  SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : SymMatrix(from_rows(rows))
  {}

  static SymMatrix identity(int d) { return SymMatrix(Matrix::Identity(d, d)); }

  int dim() const { return static_cast<int>(a_.rows()); }
  const Matrix& matrix() const { return a_; }
  double operator()(int i, int j) const { return a_(i, j); }

  SymMatrix operator*(double c) const { return SymMatrix(c * a_); }
  SymMatrix operator+(const SymMatrix& o) const { return SymMatrix(a_ + o.a_); }
  SymMatrix operator-(const SymMatrix& o) const { return SymMatrix(a_ - o.a_); }

private:
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows)
  {
    const auto d = static_cast<Eigen::Index>(rows.size());
    Matrix m(d, d);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
      if (static_cast<Eigen::Index>(row.size()) != d)
        throw dimension_error("SymMatrix rows must have equal length");
      Eigen::Index j = 0;
      for (double v : row)
        m(i, j++) = v;
      ++i;
    }
    return m;
  }

  Matrix a_;
};

struct SymEigen
{
  Vector values;  //!< descending
  Matrix vectors; //!< columns match values
};

inline SymEigen sym_eigen(const SymMatrix& s)
{
  if (!s.matrix().allFinite())
    throw numeric_error("sym_eigen: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix());
  if (es.info() != Eigen::Success)
    throw numeric_error("sym_eigen: eigensolver did not converge");
  const int d = s.dim();
  SymEigen out{ Vector(d), Matrix(d, d) };
  for (int i = 0; i < d; ++i) {
    out.values(i) = es.eigenvalues()(d - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  return out;
}

//! Symmetric positive definite matrix with cached eigendecomposition.
class SpdMatrix
{
public:
  SpdMatrix() = default;

  explicit SpdMatrix(const SymMatrix& s)
    : s_(s)
  {
    auto e = sym_eigen(s_);
    lambda_ = std::move(e.values);
    v_ = std::move(e.vectors);
    if (!(lambda_(dim() - 1) > 0.0 && lambda_(dim() - 1) > 1e-13 * lambda_(0)))
      throw not_positive_definite("matrix is not positive definite (min eigenvalue " +
                                  std::to_string(lambda_(dim() - 1)) + ")");
    logdet_ = lambda_.array().log().sum();
  }

  explicit SpdMatrix(const Matrix& a)
    : SpdMatrix(SymMatrix(a))
  {}

  SpdMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : SpdMatrix(SymMatrix(rows))
  {}

  static SpdMatrix identity(int d) { return SpdMatrix(Matrix::Identity(d, d)); }

  //! V diag(lambda) V^T; lambda need not be sorted.
  static SpdMatrix from_eigen(const Vector& lambda, const Matrix& v)
  {
    return SpdMatrix(Matrix(v * lambda.asDiagonal() * v.transpose()));
  }

  int dim() const { return s_.dim(); }
  const SymMatrix& sym() const { return s_; }
  const Matrix& matrix() const { return s_.matrix(); }
  double operator()(int i, int j) const { return s_(i, j); }
  const Vector& eigenvalues() const { return lambda_; }
  const Matrix& eigenvectors() const { return v_; }
  double logdet() const { return logdet_; }

  Matrix inverse() const
  {
    return v_ * lambda_.cwiseInverse().asDiagonal() * v_.transpose();
  }

  //! Symmetric square root V diag(sqrt(lambda)) V^T.
  Matrix sqrt() const
  {
    return v_ * lambda_.cwiseSqrt().asDiagonal() * v_.transpose();
  }

  SpdMatrix operator*(double c) const { return SpdMatrix(s_ * c); }

private:
  SymMatrix s_;
  Vector lambda_;
  Matrix v_;
  double logdet_ = 0.0;
};

inline HalfVec vecp(const SymMatrix& s)
{
  const int d = s.dim();
  HalfVec v(half_dim(d));
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i)
      v(k++) = s(i, j);
  return v;
}

inline HalfVec vecp(const SpdMatrix& s)
{
  return vecp(s.sym());
}

inline SymMatrix vecp_inv(const HalfVec& v)
{
  const int d = dim_from_half(static_cast<std::size_t>(v.size()));
  Matrix m(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  return SymMatrix(m);
}

//! Weights w with tr(AB) = sum_k w_k vecp(A)_k vecp(B)_k: 1 on the diagonal, 2 off it.
inline HalfVec frobenius_weights(int d)
{
  HalfVec w(half_dim(d));
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i)
      w(k++) = (i == j) ? 1.0 : 2.0;
  return w;
}

//! 0/1 matrix B_d of size d^2 x r(d) with vec(X) = B_d vecp(X).
inline Matrix transition_matrix(int d)
{
  if (d < 1)
    throw dimension_error("transition_matrix: d must be >= 1");
  Matrix b = Matrix::Zero(d * d, half_dim(d));
  int k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i <= j; ++i) {
      b(i + j * d, k) = 1.0;
      b(j + i * d, k) = 1.0;
      ++k;
    }
  return b;
}

//! B_d (B_d^T B_d)^{-1}, the matrix with vecp(X) = (result)^T vec(X).
//! Cov{vecp(W)} of a Wishart(nu, Sigma) matrix is 2 nu P^T (Sigma (x) Sigma) P for this P.
inline Matrix dual_transition_matrix(int d)
{
  Matrix b = transition_matrix(d);
  for (int k = 0; k < b.cols(); ++k)
    b.col(k) /= b.col(k).sum();
  return b;
}

//! ln Gamma(x) for x > 0: upward recurrence to x >= 10, then the Stirling series.
inline double log_gamma(double x)
{
  if (!(x > 0.0) || !std::isfinite(x))
    throw domain_error("log_gamma: argument must be positive and finite");
  double prod = 1.0;
  while (x < 10.0) {
    prod *= x;
    x += 1.0;
  }
  const double z = 1.0 / (x * x);
  const double series =
    (1.0 / 12.0 +
     z * (-1.0 / 360.0 +
          z * (1.0 / 1260.0 +
               z * (-1.0 / 1680.0 +
                    z * (1.0 / 1188.0 + z * (-691.0 / 360360.0 + z / 156.0)))))) /
    x;
  const double half_log_2pi = 0.91893853320467274178;
  return (x - 0.5) * std::log(x) - x + half_log_2pi + series - std::log(prod);
}

//! ln Gamma_d(alpha), product form.
inline double multigamma_ln(int d, double alpha)
{
  if (d < 1)
    throw dimension_error("multigamma_ln: d must be >= 1");
  if (!(alpha > 0.5 * (d - 1)))
    throw domain_error("multigamma_ln: alpha must exceed (d-1)/2");
  double out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int i = 1; i <= d; ++i)
    out += log_gamma(alpha - 0.5 * (i - 1));
  return out;
}

inline SymMatrix matrix_log(const SpdMatrix& s)
{
  const auto& v = s.eigenvectors();
  return SymMatrix(Matrix(v * s.eigenvalues().array().log().matrix().asDiagonal() *
                          v.transpose()));
}

inline SpdMatrix matrix_exp(const SymMatrix& y)
{
  auto e = sym_eigen(y);
  return SpdMatrix::from_eigen(e.values.array().exp().matrix(), e.vectors);
}

//! max + ln sum exp(v - max), summed in input order.
inline double log_sum_exp(std::span<const double> values)
{
  if (values.empty())
    throw std::invalid_argument("log_sum_exp: empty input");
  const double m = *std::max_element(values.begin(), values.end());
  if (std::isinf(m))
    return m;
  double s = 0.0;
  for (double v : values)
    s += std::exp(v - m);
  return m + std::log(s);
}

inline double log_sum_exp(const std::vector<double>& values)
{
  return log_sum_exp(std::span<const double>(values));
}

inline double log_sum_exp(std::initializer_list<double> values)
{
  return log_sum_exp(std::span<const double>(values.begin(), values.size()));
}

} // namespace wkde
