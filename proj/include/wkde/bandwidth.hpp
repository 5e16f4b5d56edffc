#pragma once

#include "estimators.hpp"
#include "parallel.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace wkde {

enum class CvMethod
{
  LSCV,
  LCV
};

inline std::string to_string(CvMethod m)
{
  return m == CvMethod::LSCV ? "lscv" : "lcv";
}

struct CvConfig
{
  CvMethod method = CvMethod::LSCV;
  Kernel kernel = Kernel::Wishart;
  int lag = 0;            //!< LSCV lag h; 0 means default_lag(n)
  double b_lo = 1e-4;
  double b_hi = 10.0;
  int grid_points = 25;
  double tolerance = 1e-3; //!< relative, in b
  int threads = 1;
};

//! ceil(n^{1/4})
inline int default_lag(int n)
{
  if (n < 1)
    throw std::invalid_argument("default_lag: n must be >= 1");
  int h = static_cast<int>(std::ceil(std::pow(static_cast<double>(n), 0.25)));
  // guard against pow rounding at perfect fourth powers
  while (h > 1 && std::pow(h - 1, 4) >= n)
    --h;
  while (std::pow(h, 4) < n)
    ++h;
  return h;
}

//! Pairwise statistics of a sample, shared by all criterion evaluations.
//! q(s,t) = ln|X_t| - tr(X_s^{-1} X_t), c(s,t) = ln|X_s + X_t|,
//! D(s,t) = ||log X_s - log X_t||_F^2.
class CvObjective
{
public:
  CvObjective(const SpdSeries& sample, Kernel kernel)
    : kernel_(kernel)
    , feat_(sample)
    , n_(sample.size())
  {
    const int r = feat_.r;
    const HalfVec w = frobenius_weights(feat_.d);
    if (kernel == Kernel::Wishart) {
      q_.resize(n_ * n_);
      c_.resize(n_ * n_);
      logdet_ = feat_.logdet;
      for (std::size_t s = 0; s < n_; ++s) {
        const HalfVec inv = vecp(SymMatrix(sample[s].inverse())).cwiseProduct(w);
        for (std::size_t t = 0; t < n_; ++t) {
          double tr = 0.0;
          for (int k = 0; k < r; ++k)
            tr += inv(k) * feat_.x[t * r + k];
          q_[s * n_ + t] = feat_.logdet[t] - tr;
        }
        for (std::size_t t = s; t < n_; ++t) {
          const double v =
            t == s ? feat_.d * std::numbers::ln2 + feat_.logdet[s]
                   : SpdMatrix(Matrix(sample[s].matrix() + sample[t].matrix())).logdet();
          c_[s * n_ + t] = v;
          c_[t * n_ + s] = v;
        }
      }
    } else {
      dist_.resize(n_ * n_);
      jac_.resize(n_);
      for (std::size_t s = 0; s < n_; ++s) {
        jac_[s] = matrix_log_jacobian_ln(sample[s]);
        for (std::size_t t = 0; t < n_; ++t) {
          double q = 0.0;
          for (int k = 0; k < r; ++k) {
            const double e = feat_.logm[s * r + k] - feat_.logm[t * r + k];
            q += w(k) * e * e;
          }
          dist_[s * n_ + t] = q;
        }
      }
    }
  }

  std::size_t size() const { return n_; }
  int dim() const { return feat_.d; }
  Kernel kernel() const { return kernel_; }

  //! ln of the integral of the squared estimator (Wishart: over S; log-Gaussian: of g over Sym).
  double log_squared_integral(double b) const
  {
    check_b(b);
    const int d = feat_.d;
    const double r = half_dim(d);
    std::vector<double> terms(n_ * n_);
    if (kernel_ == Kernel::Wishart) {
      const double a = 1.0 / (2.0 * b);
      const double e = 1.0 / b + 0.5 * (d + 1);
      const double cst = multigamma_ln(d, e) - r * std::log(2.0 * b) -
                         2.0 * multigamma_ln(d, a + 0.5 * (d + 1));
      for (std::size_t s = 0; s < n_; ++s)
        for (std::size_t t = 0; t < n_; ++t)
          terms[s * n_ + t] =
            cst + a * (logdet_[s] + logdet_[t]) - e * c_[s * n_ + t];
    } else {
      // -(Ls^2 + Lt^2)/2 + LsLt under the trace is -||Ls - Lt||^2 / 2
      const double cst = -0.5 * r * std::log(2.0 * std::numbers::pi * b) -
                         0.5 * d * std::numbers::ln2;
      for (std::size_t i = 0; i < n_ * n_; ++i)
        terms[i] = cst - dist_[i] / (4.0 * b);
    }
    return detail::max_shift_sum(terms.data(), terms.size()) -
           2.0 * std::log(static_cast<double>(n_));
  }

  //! ln of the kernel term anchored at s evaluated at t:
  //! Wishart ln K_{nu, bX_s}(X_t); log-Gaussian ln G_{log X_t, b}(log X_s).
  double log_kernel(std::size_t s, std::size_t t, double b) const
  {
    if (kernel_ == Kernel::Wishart)
      return q_[s * n_ + t] / (2.0 * b) + detail::wishart_kernel_const(feat_.d, b, logdet_[s]);
    return -dist_[s * n_ + t] / (2.0 * b) - detail::lg_log_norm(feat_.d, b);
  }

  double lscv(double b, int h) const
  {
    check_b(b);
    if (h < 1)
      throw config_error("lscv: lag h must be >= 1");
    std::vector<double> row, outer;
    outer.reserve(n_);
    for (std::size_t s = 0; s < n_; ++s) {
      row.clear();
      for (std::size_t t = 0; t < n_; ++t) {
        const auto gap = s > t ? s - t : t - s;
        if (gap >= static_cast<std::size_t>(h))
          row.push_back(log_kernel(s, t, b));
      }
      if (row.empty())
        throw config_error("lscv: no pairs with |s - t| >= h for s = " + std::to_string(s + 1));
      outer.push_back(detail::max_shift_sum(row.data(), row.size()) -
                      std::log(static_cast<double>(row.size())));
    }
    const double log_mean = detail::max_shift_sum(outer.data(), outer.size()) -
                            std::log(static_cast<double>(n_));
    return std::exp(log_squared_integral(b)) - 2.0 * std::exp(log_mean);
  }

  //! (1/n) sum_t ln f_hat_{-t}(X_t)
  double lcv(double b) const
  {
    check_b(b);
    if (n_ < 2)
      throw std::invalid_argument("lcv: needs n >= 2");
    std::vector<double> row(n_ - 1);
    double acc = 0.0;
    for (std::size_t t = 0; t < n_; ++t) {
      std::size_t k = 0;
      for (std::size_t s = 0; s < n_; ++s)
        if (s != t)
          row[k++] = kernel_ == Kernel::Wishart ? log_kernel(t, s, b) : log_kernel(s, t, b);
      double v = detail::max_shift_sum(row.data(), row.size()) -
                 std::log(static_cast<double>(n_ - 1));
      if (kernel_ == Kernel::LogGaussian)
        v += jac_[t];
      acc += v;
    }
    return acc / static_cast<double>(n_);
  }

private:
  static void check_b(double b)
  {
    if (!(b > 0.0) || !std::isfinite(b))
      throw std::invalid_argument("bandwidth must be positive and finite");
  }

  Kernel kernel_;
  SampleFeatures feat_;
  std::size_t n_;
  std::vector<double> q_, c_, logdet_, dist_, jac_;
};

inline double squared_integral_wishart(const SpdSeries& sample, double b)
{
  return CvObjective(sample, Kernel::Wishart).log_squared_integral(b);
}

inline double squared_integral_loggauss(const SpdSeries& sample, double b)
{
  return CvObjective(sample, Kernel::LogGaussian).log_squared_integral(b);
}

inline double lscv_criterion(const SpdSeries& sample, Kernel kernel, double b, int h)
{
  return CvObjective(sample, kernel).lscv(b, h);
}

inline double lcv_criterion(const SpdSeries& sample, Kernel kernel, double b)
{
  return CvObjective(sample, kernel).lcv(b);
}

struct CurvePoint
{
  double b;
  double value;
};

struct BandwidthResult
{
  double b = 0.0;
  double value = 0.0;             //!< criterion at b
  std::vector<CurvePoint> curve;  //!< coarse grid, increasing b
  bool at_boundary = false;
  int evaluations = 0;
};

//! Minimizes `objective` over log-spaced b: coarse scan, then golden section
//! on ln b between the neighbours of the best grid point.
inline BandwidthResult minimize_bandwidth(const std::function<double(double)>& objective,
                                          double b_lo,
                                          double b_hi,
                                          int grid_points,
                                          double tolerance,
                                          int threads = 1)
{
  if (!(b_lo > 0.0) || !(b_hi > b_lo))
    throw config_error("bandwidth search needs 0 < b_lo < b_hi");
  if (grid_points < 3)
    throw config_error("bandwidth search needs at least 3 grid points");
  if (!(tolerance > 0.0))
    throw config_error("bandwidth search tolerance must be positive");
  const double l0 = std::log(b_lo), l1 = std::log(b_hi);
  std::vector<CurvePoint> curve(grid_points);
  auto safe = [&](double b) {
    const double v = objective(b);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  parallel_for(curve.size(), threads, [&](std::size_t i) {
    const double b = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / (grid_points - 1));
    curve[i] = { b, safe(b) };
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].value < curve[best].value)
      best = i;
  BandwidthResult res;
  res.curve = curve;
  res.evaluations = grid_points;
  if (best == 0 || best + 1 == curve.size()) {
    res.b = curve[best].b;
    res.value = curve[best].value;
    res.at_boundary = true;
    return res;
  }
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(curve[best - 1].b), c = std::log(curve[best + 1].b);
  double x1 = c - invphi * (c - a), x2 = a + invphi * (c - a);
  double f1 = safe(std::exp(x1)), f2 = safe(std::exp(x2));
  res.evaluations += 2;
  double bx = std::log(curve[best].b), bf = curve[best].value;
  auto track = [&](double x, double f) {
    if (f < bf) {
      bf = f;
      bx = x;
    }
  };
  track(x1, f1);
  track(x2, f2);
  while (c - a > tolerance) {
    if (f1 < f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - invphi * (c - a);
      f1 = safe(std::exp(x1));
      track(x1, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (c - a);
      f2 = safe(std::exp(x2));
      track(x2, f2);
    }
    ++res.evaluations;
  }
  res.b = std::exp(bx);
  res.value = bf;
  return res;
}

//! LSCV is minimized, LCV maximized (as minimization of its negative).
inline BandwidthResult select_bandwidth(const CvObjective& obj, const CvConfig& cfg)
{
  const int n = static_cast<int>(obj.size());
  const int h = cfg.lag > 0 ? cfg.lag : default_lag(n);
  if (cfg.method == CvMethod::LSCV) {
    if (n - h < 1)
      throw config_error("lscv: lag h = " + std::to_string(h) + " leaves no pairs for n = " +
                         std::to_string(n));
    return minimize_bandwidth([&](double b) { return obj.lscv(b, h); }, cfg.b_lo, cfg.b_hi,
                              cfg.grid_points, cfg.tolerance, cfg.threads);
  }
  auto res = minimize_bandwidth([&](double b) { return -obj.lcv(b); }, cfg.b_lo, cfg.b_hi,
                                cfg.grid_points, cfg.tolerance, cfg.threads);
  res.value = -res.value;
  for (auto& p : res.curve)
    p.value = -p.value;
  return res;
}

inline BandwidthResult select_bandwidth(const SpdSeries& sample, const CvConfig& cfg)
{
  return select_bandwidth(CvObjective(sample, cfg.kernel), cfg);
}

inline void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve)
{
  char buf[80];
  os << "b,value\n";
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.b, p.value);
    os << buf;
  }
}

} // namespace wkde
