#pragma once

#include "matcore.hpp"
#include "parallel.hpp"
#include "wishart.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace wkde {

enum class Kernel
{
  Wishart,
  LogGaussian
};

inline std::string to_string(Kernel k)
{
  return k == Kernel::Wishart ? "wishart" : "loggauss";
}

//! Ordered SPD observations, optionally labelled.
struct SpdSeries
{
  int dim = 0;
  std::vector<SpdMatrix> observations;
  std::vector<std::string> timestamps;

  SpdSeries() = default;
  explicit SpdSeries(std::vector<SpdMatrix> obs, std::vector<std::string> ts = {})
    : observations(std::move(obs))
    , timestamps(std::move(ts))
  {
    if (observations.empty())
      throw std::invalid_argument("SpdSeries: needs at least one observation");
    dim = observations.front().dim();
    for (const auto& x : observations)
      if (x.dim() != dim)
        throw dimension_error("SpdSeries: observations differ in dimension");
    if (!timestamps.empty() && timestamps.size() != observations.size())
      throw dimension_error("SpdSeries: timestamp count differs from observation count");
  }

  std::size_t size() const { return observations.size(); }
  const SpdMatrix& operator[](std::size_t i) const { return observations[i]; }
};

//! ln J(S) of the matrix-log map: -ln|S| + sum_{i<j} ln[(ln l_i - ln l_j)/(l_i - l_j)],
//! with 1/l_i substituted for (numerically) equal eigenvalues.
inline double matrix_log_jacobian_ln(const SpdMatrix& s)
{
  const auto& l = s.eigenvalues();
  const int d = s.dim();
  double out = -s.logdet();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double gap = l(i) - l(j);
      if (gap < 1e-10 * std::max(1.0, l(i)))
        out -= std::log(l(i));
      else
        out += std::log(std::log1p(gap / l(j)) / gap);
    }
  return out;
}

//! Per-observation quantities reused by every evaluation.
struct SampleFeatures
{
  int d = 0;
  int r = 0;
  std::size_t n = 0;
  std::vector<double> x;      //!< n x r, vecp(X_t)
  std::vector<double> logdet; //!< ln|X_t|
  std::vector<double> logm;   //!< n x r, vecp(log X_t)

  explicit SampleFeatures(const SpdSeries& s)
    : d(s.dim)
    , r(half_dim(s.dim))
    , n(s.size())
    , x(n * r)
    , logdet(n)
    , logm(n * r)
  {
    for (std::size_t t = 0; t < n; ++t) {
      const HalfVec v = vecp(s[t]);
      const HalfVec lv = vecp(matrix_log(s[t]));
      for (int k = 0; k < r; ++k) {
        x[t * r + k] = v(k);
        logm[t * r + k] = lv(k);
      }
      logdet[t] = s[t].logdet();
    }
  }
};

//! Evaluation point with everything the kernels need precomputed.
struct EvalPoint
{
  int d = 0;
  HalfVec inv_w;  //!< tr(S^{-1} X) = inv_w . vecp(X)
  HalfVec logm;   //!< vecp(log S)
  double logdet = 0.0;
  double log_jacobian = 0.0;
};

//! Non-owning view of an evaluation point (inv_w and logm have r(d) entries).
struct EvalPointView
{
  int d = 0;
  const double* inv_w = nullptr;
  const double* logm = nullptr;
  double logdet = 0.0;
  double log_jacobian = 0.0;
};

inline EvalPointView view(const EvalPoint& p)
{
  return { p.d, p.inv_w.data(), p.logm.data(), p.logdet, p.log_jacobian };
}

inline EvalPoint prepare_point(const SpdMatrix& s)
{
  EvalPoint p;
  p.d = s.dim();
  p.inv_w = vecp(SymMatrix(s.inverse())).cwiseProduct(frobenius_weights(p.d));
  p.logm = vecp(matrix_log(s));
  p.logdet = s.logdet();
  p.log_jacobian = matrix_log_jacobian_ln(s);
  return p;
}

namespace detail {

//! ln of the log-Gaussian kernel normalizer (2 pi b)^{d(d+1)/4} 2^{-d(d-1)/4}.
inline double lg_log_norm(int d, double b)
{
  return 0.25 * d * (d + 1) * std::log(2.0 * std::numbers::pi * b) -
         0.25 * d * (d - 1) * std::numbers::ln2;
}

//! Wishart-kernel constant -(nu/2)(d ln 2b + ln|S|) - ln Gamma_d(nu/2), nu = 1/b + d + 1.
inline double wishart_kernel_const(int d, double b, double logdet_s)
{
  const double nu = 1.0 / b + d + 1;
  return -0.5 * nu * (d * std::log(2.0 * b) + logdet_s) - multigamma_ln(d, 0.5 * nu);
}

inline double max_shift_sum(const double* v, std::size_t n)
{
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    m = std::max(m, v[i]);
  if (std::isinf(m))
    return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += std::exp(v[i] - m);
  return m + std::log(s);
}

template<int R>
inline void wishart_terms(const SampleFeatures& f, const double* inv_w, double half_inv_b, double* out)
{
  const int r = R > 0 ? R : f.r;
  const double* x = f.x.data();
  for (std::size_t t = 0; t < f.n; ++t) {
    double tr = 0.0;
    for (int k = 0; k < r; ++k)
      tr += inv_w[k] * x[t * r + k];
    out[t] = half_inv_b * (f.logdet[t] - tr);
  }
}

template<int R>
inline void lg_terms(const SampleFeatures& f, const double* w, const double* y, double half_inv_b, double* out)
{
  const int r = R > 0 ? R : f.r;
  const double* m = f.logm.data();
  for (std::size_t t = 0; t < f.n; ++t) {
    double q = 0.0;
    for (int k = 0; k < r; ++k) {
      const double e = y[k] - m[t * r + k];
      q += w[k] * e * e;
    }
    out[t] = -half_inv_b * q;
  }
}

} // namespace detail

//! Fitted estimator: kernel kind, sample and scalar bandwidth. Immutable.
class KdeSpec
{
public:
  KdeSpec(Kernel kernel, SpdSeries sample, double b)
    : kernel_(kernel)
    , sample_(std::make_shared<const SpdSeries>(std::move(sample)))
    , b_(b)
  {
    if (!(b > 0.0) || !std::isfinite(b))
      throw std::invalid_argument("KdeSpec: bandwidth must be positive and finite");
    if (sample_->size() == 0)
      throw std::invalid_argument("KdeSpec: empty sample");
    features_ = std::make_shared<const SampleFeatures>(*sample_);
    weights_ = frobenius_weights(sample_->dim);
  }

  //! Same sample and cached features, new bandwidth.
  KdeSpec with_bandwidth(double b) const
  {
    if (!(b > 0.0) || !std::isfinite(b))
      throw std::invalid_argument("KdeSpec: bandwidth must be positive and finite");
    KdeSpec out = *this;
    out.b_ = b;
    return out;
  }

  Kernel kernel() const { return kernel_; }
  double bandwidth() const { return b_; }
  int dim() const { return sample_->dim; }
  const SpdSeries& sample() const { return *sample_; }
  const SampleFeatures& features() const { return *features_; }

  //! ln f_hat(S); scratch is resized to n.
  double log_eval(const EvalPointView& p, std::vector<double>& scratch) const
  {
    if (p.d != dim())
      throw dimension_error("KdeSpec: evaluation point has the wrong dimension");
    const auto& f = *features_;
    scratch.resize(f.n);
    const double hib = 0.5 / b_;
    const double log_n = std::log(static_cast<double>(f.n));
    if (kernel_ == Kernel::Wishart) {
      switch (f.r) {
        case 1: detail::wishart_terms<1>(f, p.inv_w, hib, scratch.data()); break;
        case 3: detail::wishart_terms<3>(f, p.inv_w, hib, scratch.data()); break;
        default: detail::wishart_terms<0>(f, p.inv_w, hib, scratch.data());
      }
      return detail::max_shift_sum(scratch.data(), f.n) +
             detail::wishart_kernel_const(f.d, b_, p.logdet) - log_n;
    }
    const double* w = weights_.data();
    switch (f.r) {
      case 1: detail::lg_terms<1>(f, w, p.logm, hib, scratch.data()); break;
      case 3: detail::lg_terms<3>(f, w, p.logm, hib, scratch.data()); break;
      default: detail::lg_terms<0>(f, w, p.logm, hib, scratch.data());
    }
    return detail::max_shift_sum(scratch.data(), f.n) - detail::lg_log_norm(f.d, b_) -
           log_n + p.log_jacobian;
  }

  double log_eval(const SpdMatrix& s) const
  {
    std::vector<double> scratch;
    const EvalPoint p = prepare_point(s);
    return log_eval(view(p), scratch);
  }

private:
  Kernel kernel_;
  std::shared_ptr<const SpdSeries> sample_;
  std::shared_ptr<const SampleFeatures> features_;
  HalfVec weights_;
  double b_;
};

inline double wishart_kde_log_eval(const KdeSpec& spec, const SpdMatrix& s)
{
  if (spec.kernel() != Kernel::Wishart)
    throw std::invalid_argument("wishart_kde_log_eval: spec uses the log-Gaussian kernel");
  if (s.dim() != spec.dim())
    throw std::invalid_argument("wishart_kde_log_eval: dimension mismatch");
  return spec.log_eval(s);
}

inline double loggauss_kde_log_eval(const KdeSpec& spec, const SpdMatrix& s)
{
  if (spec.kernel() != Kernel::LogGaussian)
    throw std::invalid_argument("loggauss_kde_log_eval: spec uses the Wishart kernel");
  if (s.dim() != spec.dim())
    throw std::invalid_argument("loggauss_kde_log_eval: dimension mismatch");
  return spec.log_eval(s);
}

struct GridValue
{
  SpdMatrix point;
  double log_density;
};

//! Pointwise evaluation, order preserved. Errors carry the failing index.
inline std::vector<GridValue> eval_grid(const KdeSpec& spec,
                                        const std::vector<SpdMatrix>& grid,
                                        int threads = 1)
{
  std::vector<double> vals(grid.size());
  std::vector<std::vector<double>> scratch(std::max(threads, 1));
  const std::size_t t = std::max<std::size_t>(1, std::min<std::size_t>(std::max(threads, 1), grid.size()));
  parallel_for(t, threads, [&](std::size_t w) {
    const std::size_t lo = grid.size() * w / t, hi = grid.size() * (w + 1) / t;
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        const EvalPoint p = prepare_point(grid[i]);
        vals[i] = spec.log_eval(view(p), scratch[w]);
      } catch (const std::exception& e) {
        throw std::runtime_error("eval_grid: point " + std::to_string(i) + ": " + e.what());
      }
    }
  });
  std::vector<GridValue> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.push_back({ grid[i], vals[i] });
  return out;
}

} // namespace wkde
