#pragma once

#include "matcore.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace wkde {

struct WishartParams
{
  double dof;
  SpdMatrix scale;
};

//! Wishart kernel with dof nu(b, d) = 1/b + d + 1 and scale bS; its mode is S.
struct KernelParams
{
  double b;
  SpdMatrix anchor;
  double dof;
  SpdMatrix scale;

  WishartParams wishart() const { return { dof, scale }; }
};

namespace detail {

inline void check_dof(double nu, int d)
{
  if (!(nu > d - 1))
    throw domain_error("Wishart dof must exceed d - 1");
}

inline void check_same_dim(int a, int b, const char* what)
{
  if (a != b)
    throw dimension_error(std::string(what) + ": dimension mismatch");
}

inline double trace_product(const Matrix& a, const Matrix& b)
{
  return a.cwiseProduct(b).sum();
}

inline Matrix kron(const Matrix& a, const Matrix& b)
{
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

} // namespace detail

inline double wishart_logpdf(const WishartParams& p, const SpdMatrix& x)
{
  const int d = x.dim();
  detail::check_same_dim(d, p.scale.dim(), "wishart_logpdf");
  detail::check_dof(p.dof, d);
  const double tr = detail::trace_product(p.scale.inverse(), x.matrix());
  return 0.5 * (p.dof - d - 1) * x.logdet() - 0.5 * tr -
         0.5 * p.dof * (d * std::numbers::ln2 + p.scale.logdet()) -
         multigamma_ln(d, 0.5 * p.dof);
}

//! Bartlett construction; works for any real dof > d - 1.
template<class Rng>
SpdMatrix sample_wishart(const WishartParams& p, Rng& rng)
{
  const int d = p.scale.dim();
  detail::check_dof(p.dof, d);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix l = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    std::chi_squared_distribution<double> chi(p.dof - i);
    l(i, i) = std::sqrt(chi(rng));
    for (int j = 0; j < i; ++j)
      l(i, j) = z(rng);
  }
  const Matrix a = p.scale.sqrt() * l;
  return SpdMatrix(Matrix(a * a.transpose()));
}

inline KernelParams kernel_params(double b, const SpdMatrix& s)
{
  if (!(b > 0.0) || !std::isfinite(b))
    throw std::invalid_argument("bandwidth must be positive and finite");
  return { b, s, 1.0 / b + s.dim() + 1, s * b };
}

struct KernelMoments
{
  SpdMatrix mean;
  Matrix leading_vecp_cov;
};

//! Mean (1 + b(d+1))S and leading covariance 2b P^T (S (x) S) P of vecp.
inline KernelMoments kernel_moments(double b, const SpdMatrix& s)
{
  kernel_params(b, s);
  const int d = s.dim();
  const Matrix p = dual_transition_matrix(d);
  Matrix cov = 2.0 * b * p.transpose() * detail::kron(s.matrix(), s.matrix()) * p;
  return { s * (1.0 + b * (d + 1)), cov };
}

//! Leading-order bound on sup_X K_{nu(b,d), bS}(X).
inline double kernel_sup_bound(double b, const SpdMatrix& s)
{
  kernel_params(b, s);
  const int d = s.dim();
  const double r = half_dim(d);
  return std::exp(-0.5 * r * std::log(b) - 0.5 * (d + 1) * s.logdet() -
                  (0.5 * r + 0.5 * d) * std::numbers::ln2 -
                  0.5 * r * std::log(std::numbers::pi));
}

//! Leading-order value of ||K_{nu(b,d), bS}||_q^2.
inline double kernel_lq_norm_sq(double b, const SpdMatrix& s, double q)
{
  if (!(q > 1.0))
    throw std::invalid_argument("kernel_lq_norm_sq: q must exceed 1");
  kernel_params(b, s);
  const int d = s.dim();
  const double r = half_dim(d);
  const double ip = 1.0 - 1.0 / q;
  return std::exp(-r * ip * std::log(b) - (d + 1) * ip * s.logdet() -
                  (r * ip + d * ip) * std::numbers::ln2 - (r / q) * std::log(q) -
                  r * ip * std::log(std::numbers::pi));
}

//! Pointwise bound on |K_{nu, bS2}(X) - K_{nu, bS}(X)|.
inline double kernel_diff_bound(double b,
                                const SpdMatrix& s,
                                const SpdMatrix& s2,
                                const SpdMatrix& x)
{
  const int d = s.dim();
  detail::check_same_dim(d, s2.dim(), "kernel_diff_bound");
  detail::check_same_dim(d, x.dim(), "kernel_diff_bound");
  const auto kp = kernel_params(b, s);
  const double r = half_dim(d);
  const double min_logdet = std::min(s.logdet(), s2.logdet());
  const double sup = std::exp(-0.5 * r * std::log(b) - 0.5 * (d + 1) * min_logdet -
                              (0.5 * r + 0.5 * d) * std::numbers::ln2 -
                              0.5 * r * std::log(std::numbers::pi));
  const double lmin = std::min(s.eigenvalues()(d - 1), s2.eigenvalues()(d - 1));
  const double lx = x.eigenvalues()(0);
  const double dist = (s.matrix() - s2.matrix()).norm();
  return sup * std::sqrt(static_cast<double>(d)) * (kp.dof + lx / (b * lmin)) /
         (2.0 * lmin) * dist;
}

struct EigenTailBounds
{
  double upper; //!< bounds P(lambda_1(X) >= 1/delta)
  double lower; //!< bounds P(lambda_d(X) <= delta)
};

inline EigenTailBounds eigen_tail_bounds(const WishartParams& p, double delta)
{
  const int d = p.scale.dim();
  detail::check_dof(p.dof, d);
  if (!(delta > 0.0))
    throw domain_error("eigen_tail_bounds: delta must be positive");
  const double l1 = p.scale.eigenvalues()(0);
  if (!(delta < 1.0 / (6.0 * p.dof * d * l1)))
    throw domain_error("eigen_tail_bounds: upper bound needs delta < 1/(6 nu d lambda_1(Sigma))");
  if (!(p.dof >= d + 1))
    throw domain_error("eigen_tail_bounds: lower bound needs nu >= d + 1");
  const double tr_inv = p.scale.inverse().trace();
  return { std::exp(-0.25 / (delta * l1)), -std::expm1(-0.5 * delta * tr_inv) };
}

} // namespace wkde
