#pragma once

#include "bandwidth.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "warsim.hpp"
#include "wishart.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace wkde {

//! Target density f for diagnostics. Derivatives are with respect to vecp(S)
//! and fall back to central differences when not supplied.
struct TargetDensity
{
  int dim = 0;
  std::function<double(const SpdMatrix&)> log_density;
  std::function<HalfVec(const SpdMatrix&)> gradient;
  std::function<Matrix(const SpdMatrix&)> hessian;
  double grad_step = 1e-5;
  double hess_step = 1e-3;

  double operator()(const SpdMatrix& s) const { return std::exp(log_density(s)); }
};

inline TargetDensity wishart_target(const WishartParams& p)
{
  TargetDensity f;
  f.dim = p.scale.dim();
  f.log_density = [p](const SpdMatrix& s) { return wishart_logpdf(p, s); };
  const double a = 0.5 * (p.dof - f.dim - 1);
  const Matrix sigma_inv = p.scale.inverse();
  // d ln f = <a X^{-1} - Sigma^{-1}/2, dX>,  d^2 ln f = -a tr(X^{-1} dX X^{-1} dX)
  auto grad_log = [a, sigma_inv](const SpdMatrix& x) {
    const Matrix g = a * x.inverse() - 0.5 * sigma_inv;
    return HalfVec(vecp(SymMatrix(g)).cwiseProduct(frobenius_weights(x.dim())));
  };
  f.gradient = [p, grad_log](const SpdMatrix& x) { return HalfVec(std::exp(wishart_logpdf(p, x)) * grad_log(x)); };
  f.hessian = [p, a, grad_log](const SpdMatrix& x) {
    const Matrix dm = transition_matrix(x.dim());
    const Matrix xi = x.inverse();
    const HalfVec g = grad_log(x);
    const Matrix h = g * g.transpose() - a * dm.transpose() * detail::kron(xi, xi) * dm;
    return Matrix(std::exp(wishart_logpdf(p, x)) * h);
  };
  return f;
}

//! psi(S) = |S|^{-(d+1)/2} / (2^{r + d/2} pi^{r/2})
inline double psi(const SpdMatrix& s)
{
  const int d = s.dim();
  const double r = half_dim(d);
  return std::exp(-0.5 * (d + 1) * s.logdet() - (r + 0.5 * d) * std::numbers::ln2 -
                  0.5 * r * std::log(std::numbers::pi));
}

namespace detail {

inline double density_at(const TargetDensity& f, const HalfVec& v)
{
  try {
    return f(SpdMatrix(vecp_inv(v)));
  } catch (const not_positive_definite&) {
    throw numeric_error("finite-difference step left the SPD cone");
  }
}

} // namespace detail

inline HalfVec vecp_gradient(const TargetDensity& f, const SpdMatrix& s)
{
  if (f.gradient)
    return f.gradient(s);
  const HalfVec v = vecp(s);
  HalfVec g(v.size());
  for (int k = 0; k < v.size(); ++k) {
    const double h = f.grad_step * std::max(1.0, std::abs(v(k)));
    HalfVec p = v, m = v;
    p(k) += h;
    m(k) -= h;
    g(k) = (detail::density_at(f, p) - detail::density_at(f, m)) / (2.0 * h);
  }
  if (!g.allFinite())
    throw numeric_error("non-finite gradient difference quotient");
  return g;
}

inline Matrix vecp_hessian(const TargetDensity& f, const SpdMatrix& s)
{
  if (f.hessian)
    return f.hessian(s);
  const HalfVec v = vecp(s);
  const int r = static_cast<int>(v.size());
  HalfVec h(r);
  for (int k = 0; k < r; ++k)
    h(k) = f.hess_step * std::max(1.0, std::abs(v(k)));
  Matrix out(r, r);
  for (int k = 0; k < r; ++k)
    for (int l = k; l < r; ++l) {
      double acc = 0.0;
      for (int sk : { 1, -1 })
        for (int sl : { 1, -1 }) {
          HalfVec p = v;
          p(k) += sk * h(k);
          p(l) += sl * h(l);
          acc += sk * sl * detail::density_at(f, p);
        }
      out(k, l) = out(l, k) = acc / (4.0 * h(k) * h(l));
    }
  if (!out.allFinite())
    throw numeric_error("non-finite Hessian difference quotient");
  return out;
}

//! g(S) = (d+1) grad f^T vecp(S) + <Hess f, P^T (S (x) S) P>, P = dual_transition_matrix(d).
inline double bias_coefficient_g(const TargetDensity& f, const SpdMatrix& s)
{
  const int d = s.dim();
  const HalfVec grad = vecp_gradient(f, s);
  const Matrix hess = vecp_hessian(f, s);
  const Matrix p = dual_transition_matrix(d);
  const Matrix c = p.transpose() * detail::kron(s.matrix(), s.matrix()) * p;
  return (d + 1) * grad.dot(vecp(s)) + hess.cwiseProduct(c).sum();
}

//! b*_n = n^{-2/(r+4)} [ (r/4) psi f / g^2 ]^{2/(r+4)}
inline double mse_optimal_bandwidth(int n, const SpdMatrix& s, const TargetDensity& f)
{
  const double r = half_dim(s.dim());
  const double g = bias_coefficient_g(f, s);
  if (g == 0.0)
    throw domain_error("mse_optimal_bandwidth: g(S) = 0, the optimal bandwidth is undefined");
  const double e = 2.0 / (r + 4.0);
  return std::pow(static_cast<double>(n), -e) * std::pow(0.25 * r * psi(s) * f(s) / (g * g), e);
}

//! n^{-1} b^{-r/2} psi f + b^2 g^2
inline double mse_theory(int n, double b, const SpdMatrix& s, const TargetDensity& f)
{
  const double r = half_dim(s.dim());
  const double g = bias_coefficient_g(f, s);
  return psi(s) * f(s) / (n * std::pow(b, 0.5 * r)) + b * b * g * g;
}

//! sqrt((2/pi) psi f) / (n^{1/2} b^{r/4}) + b |g|
inline double mae_upper_bound(int n, double b, const SpdMatrix& s, const TargetDensity& f)
{
  const double r = half_dim(s.dim());
  const double g = bias_coefficient_g(f, s);
  return std::sqrt(2.0 / std::numbers::pi * psi(s) * f(s)) /
           (std::sqrt(static_cast<double>(n)) * std::pow(b, 0.25 * r)) +
         b * std::abs(g);
}

//! n^{1/2} b^{r/4} (fhat - f(S) - b g(S)) / sqrt(psi f), centred at the leading bias b g(S).
inline double clt_standardize(double fhat, int n, double b, const SpdMatrix& s, const TargetDensity& f)
{
  const double r = half_dim(s.dim());
  const double fs = f(s);
  const double g = bias_coefficient_g(f, s);
  return std::sqrt(static_cast<double>(n)) * std::pow(b, 0.25 * r) * (fhat - fs - b * g) /
         std::sqrt(psi(s) * fs);
}

struct QuadRule
{
  std::vector<double> x;
  std::vector<double> w;
};

namespace detail {

//! (P_m(x), P_m'(x))
inline std::pair<double, double> legendre(int m, double x)
{
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= m; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return { p1, m * (x * p1 - p0) / (x * x - 1.0) };
}

} // namespace detail

//! m-point Gauss-Legendre rule on [-1, 1], nodes ascending.
inline QuadRule gauss_legendre(int m)
{
  if (m < 1)
    throw std::invalid_argument("gauss_legendre: need at least one node");
  QuadRule q{ std::vector<double>(m), std::vector<double>(m) };
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre(m, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    const double dp = detail::legendre(m, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.x[i] = -x;
    q.w[i] = w;
    q.x[m - 1 - i] = x;
    q.w[m - 1 - i] = w;
  }
  return q;
}

//! Composite Gauss-Legendre on [0, len] with panels [0, len 2^{1-P}], ..., [len/2, len].
inline QuadRule graded_gauss_legendre(double len, int nodes, int panels)
{
  if (panels < 1 || nodes < panels)
    throw std::invalid_argument("graded_gauss_legendre: need nodes >= panels >= 1");
  const int m = (nodes + panels - 1) / panels;
  const QuadRule g = gauss_legendre(m);
  QuadRule out;
  double lo = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double hi = len * std::ldexp(1.0, p + 1 - panels);
    for (int i = 0; i < m; ++i) {
      out.x.push_back(lo + 0.5 * (hi - lo) * (g.x[i] + 1.0));
      out.w.push_back(0.5 * (hi - lo) * g.w[i]);
    }
    lo = hi;
  }
  return out;
}

//! Quadrature for integrals over 2x2 SPD matrices in eigen coordinates.
//! Nodes cover lambda_1 in (0, lambda_max], lambda_2 = t lambda_1 with t in (0, 1)
//! and theta in [0, pi), one copy of the 4-to-1 parametrization. With a whitening
//! matrix W the nodes are X = W^{1/2} Y W^{1/2}, Y as above.
struct QuadConfig
{
  double lambda_max = 30.0;
  int lambda_nodes = 64;
  int theta_nodes = 32;
  int panels = 8;
  std::optional<SpdMatrix> whitening;
};

class RiseGrid
{
public:
  explicit RiseGrid(const QuadConfig& q, int threads = 1)
  {
    if (!(q.lambda_max > 0.0) || q.lambda_nodes < 1 || q.theta_nodes < 1)
      throw std::invalid_argument("RiseGrid: invalid quadrature configuration");
    if (q.whitening && q.whitening->dim() != 2)
      throw dimension_error("RiseGrid: whitening matrix must be 2x2");
    const QuadRule l1 = graded_gauss_legendre(q.lambda_max, q.lambda_nodes, q.panels);
    const QuadRule tt = graded_gauss_legendre(1.0, q.lambda_nodes, q.panels);
    const Matrix a = q.whitening ? q.whitening->sqrt() : Matrix::Identity(2, 2);
    const double jac = q.whitening ? std::exp(1.5 * q.whitening->logdet()) : 1.0;
    const double wth = std::numbers::pi / q.theta_nodes;
    n_ = l1.x.size() * tt.x.size() * q.theta_nodes;
    pts_.resize(3 * n_);
    w_.resize(n_);
    inv_w_.resize(3 * n_);
    logm_.resize(3 * n_);
    logdet_.resize(n_);
    logjac_.resize(n_);
    const std::size_t per_l1 = tt.x.size() * q.theta_nodes;
    parallel_for(l1.x.size(), threads, [&](std::size_t i) {
      const double lam1 = l1.x[i];
      std::size_t idx = i * per_l1;
      for (std::size_t j = 0; j < tt.x.size(); ++j) {
        const double lam2 = tt.x[j] * lam1;
        const double wl = l1.w[i] * tt.w[j] * lam1 * (lam1 - lam2) * wth * jac;
        for (int k = 0; k < q.theta_nodes; ++k, ++idx) {
          const double th = wth * k, c = std::cos(th), s = std::sin(th);
          Matrix rot(2, 2);
          rot << c, -s, s, c;
          const Matrix y = rot * Vector(Vector2(lam1, lam2)).asDiagonal() * rot.transpose();
          const SpdMatrix x(Matrix(a * y * a));
          const EvalPoint p = prepare_point(x);
          const HalfVec v = vecp(x);
          for (int r = 0; r < 3; ++r) {
            pts_[3 * idx + r] = v(r);
            inv_w_[3 * idx + r] = p.inv_w(r);
            logm_[3 * idx + r] = p.logm(r);
          }
          logdet_[idx] = p.logdet;
          logjac_[idx] = p.log_jacobian;
          w_[idx] = wl;
        }
      }
    });
  }

  std::size_t size() const { return n_; }
  const std::vector<double>& weights() const { return w_; }

  SpdMatrix point(std::size_t i) const
  {
    HalfVec v(3);
    v << pts_[3 * i], pts_[3 * i + 1], pts_[3 * i + 2];
    return SpdMatrix(vecp_inv(v));
  }

  EvalPointView eval_point(std::size_t i) const
  {
    return { 2, &inv_w_[3 * i], &logm_[3 * i], logdet_[i], logjac_[i] };
  }

  std::vector<double> log_values(const std::function<double(const SpdMatrix&)>& f,
                                 int threads = 1) const
  {
    std::vector<double> out(n_);
    parallel_for(n_, threads, [&](std::size_t i) { out[i] = f(point(i)); });
    return out;
  }

  std::vector<double> log_values(const KdeSpec& spec, int threads = 1) const
  {
    if (spec.dim() != 2)
      throw dimension_error("RiseGrid: estimator must be 2x2");
    std::vector<double> out(n_);
    const std::size_t t = std::max<std::size_t>(1, std::min<std::size_t>(std::max(threads, 1), n_));
    parallel_for(t, threads, [&](std::size_t w) {
      std::vector<double> scratch;
      for (std::size_t i = n_ * w / t; i < n_ * (w + 1) / t; ++i)
        out[i] = spec.log_eval(eval_point(i), scratch);
    });
    return out;
  }

  //! sum_i w_i exp(v_i)
  double integrate_exp(const std::vector<double>& logv) const
  {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      s += w_[i] * std::exp(logv[i]);
    return s;
  }

  //! sqrt(sum_i w_i (exp a_i - exp b_i)^2)
  double rise(const std::vector<double>& loga, const std::vector<double>& logb) const
  {
    if (loga.size() != n_ || logb.size() != n_)
      throw dimension_error("RiseGrid::rise: value vectors do not match the grid");
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double diff = std::exp(loga[i]) - std::exp(logb[i]);
      s += w_[i] * diff * diff;
    }
    return std::sqrt(s);
  }

private:
  using Vector2 = Eigen::Vector2d;
  std::size_t n_ = 0;
  std::vector<double> pts_, w_, inv_w_, logm_, logdet_, logjac_;
};

//! Root integrated squared error between two densities on 2x2 SPD matrices.
inline double rise_d2(const std::function<double(const SpdMatrix&)>& estimate,
                      const std::function<double(const SpdMatrix&)>& target,
                      const QuadConfig& quad = {},
                      int threads = 1)
{
  const RiseGrid grid(quad, threads);
  return grid.rise(grid.log_values(estimate, threads), grid.log_values(target, threads));
}

enum class Method
{
  W_lscv,
  W_lcv,
  LG_lscv,
  LG_lcv
};

inline std::string to_string(Method m)
{
  switch (m) {
    case Method::W_lscv: return "W_lscv";
    case Method::W_lcv: return "W_lcv";
    case Method::LG_lscv: return "LG_lscv";
    default: return "LG_lcv";
  }
}

inline Method parse_method(const std::string& s)
{
  for (Method m : { Method::W_lscv, Method::W_lcv, Method::LG_lscv, Method::LG_lcv })
    if (to_string(m) == s)
      return m;
  throw config_error("unknown method '" + s + "' (expected W_lscv, W_lcv, LG_lscv or LG_lcv)");
}

inline Kernel kernel_of(Method m)
{
  return (m == Method::W_lscv || m == Method::W_lcv) ? Kernel::Wishart : Kernel::LogGaussian;
}

inline CvMethod cv_of(Method m)
{
  return (m == Method::W_lscv || m == Method::LG_lscv) ? CvMethod::LSCV : CvMethod::LCV;
}

struct StudyModel
{
  std::string id;
  WarModel model;
};

struct StudyConfig
{
  std::vector<StudyModel> models;
  std::vector<int> sample_sizes;
  std::vector<Method> methods{ Method::W_lscv, Method::W_lcv, Method::LG_lscv, Method::LG_lcv };
  int replications = 100;
  QuadConfig quad;
  bool whiten = true; //!< use Sigma_inf of each model as the quadrature whitening matrix
  std::uint64_t seed = 1;
  int burnin = 200;
  int threads = 1;
  double b_lo = 1e-4;
  double b_hi = 10.0;
  int grid_points = 25;
  double tolerance = 1e-3;
};

struct CellResult
{
  std::string model;
  int n = 0;
  Method method = Method::W_lscv;
  std::vector<double> rise;      //!< NaN for failed replications
  std::vector<double> bandwidth;
  std::vector<double> time_ms;
  std::vector<char> boundary;
  std::vector<std::string> errors;
  int failures = 0;
  double median = 0.0;
  double iqr = 0.0;
  double mean_time_ms = 0.0;
  double mean_bandwidth = 0.0;
};

struct StudySummary
{
  std::vector<CellResult> cells;

  const CellResult& cell(const std::string& model, int n, Method m) const
  {
    for (const auto& c : cells)
      if (c.model == model && c.n == n && c.method == m)
        return c;
    throw std::out_of_range("no study cell " + model + "/" + std::to_string(n) + "/" + to_string(m));
  }

  int total_failures() const
  {
    int f = 0;
    for (const auto& c : cells)
      f += c.failures;
    return f;
  }
};

//! Seed for (model, n, replication); independent of thread count.
inline std::seed_seq replication_seed(std::uint64_t seed, std::size_t model, int n, int rep)
{
  return std::seed_seq{ static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(model), static_cast<std::uint32_t>(n),
                        static_cast<std::uint32_t>(rep) };
}

inline StudySummary simulation_study(const StudyConfig& cfg,
                                     const std::function<void(const std::string&)>& progress = {})
{
  if (cfg.replications < 1)
    throw config_error("study: replications must be >= 1");
  if (cfg.methods.empty())
    throw config_error("study: no methods");
  if (cfg.models.empty() || cfg.sample_sizes.empty())
    throw config_error("study: no models or sample sizes");
  StudySummary out;
  const int nm = static_cast<int>(cfg.methods.size());
  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    const auto& sm = cfg.models[mi];
    if (sm.model.sigma.dim() != 2)
      throw config_error("study: RISE quadrature needs 2x2 models");
    QuadConfig q = cfg.quad;
    if (cfg.whiten && !q.whitening)
      q.whitening = lyapunov_stationary(sm.model.m, sm.model.sigma);
    const RiseGrid grid(q, cfg.threads);
    const auto target = grid.log_values(stationary_density(sm.model), cfg.threads);
    for (int n : cfg.sample_sizes) {
      std::vector<CellResult> cells(nm);
      for (int k = 0; k < nm; ++k) {
        auto& c = cells[k];
        c.model = sm.id;
        c.n = n;
        c.method = cfg.methods[k];
        c.rise.assign(cfg.replications, std::nan(""));
        c.bandwidth.assign(cfg.replications, std::nan(""));
        c.time_ms.assign(cfg.replications, std::nan(""));
        c.boundary.assign(cfg.replications, 0);
        c.errors.assign(cfg.replications, "");
      }
      parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
        auto ss = replication_seed(cfg.seed, mi, n, static_cast<int>(rep));
        std::mt19937_64 rng(ss);
        SpdSeries sample;
        try {
          sample = war1_simulate(sm.model, n, cfg.burnin, rng);
        } catch (const std::exception& e) {
          for (auto& c : cells)
            c.errors[rep] = std::string("simulation: ") + e.what();
          return;
        }
        std::optional<KdeSpec> base[2];
        for (int k = 0; k < nm; ++k) {
          auto& c = cells[k];
          try {
            CvConfig cv;
            cv.method = cv_of(c.method);
            cv.kernel = kernel_of(c.method);
            cv.b_lo = cfg.b_lo;
            cv.b_hi = cfg.b_hi;
            cv.grid_points = cfg.grid_points;
            cv.tolerance = cfg.tolerance;
            const auto t0 = std::chrono::steady_clock::now();
            const CvObjective obj(sample, cv.kernel);
            const auto sel = select_bandwidth(obj, cv);
            const auto t1 = std::chrono::steady_clock::now();
            c.time_ms[rep] = std::chrono::duration<double, std::milli>(t1 - t0).count();
            c.bandwidth[rep] = sel.b;
            c.boundary[rep] = sel.at_boundary;
            const int ki = cv.kernel == Kernel::Wishart ? 0 : 1;
            if (!base[ki])
              base[ki].emplace(cv.kernel, sample, sel.b);
            const KdeSpec spec = base[ki]->with_bandwidth(sel.b);
            const double r = grid.rise(grid.log_values(spec), target);
            if (!std::isfinite(r))
              throw numeric_error("non-finite RISE");
            c.rise[rep] = r;
          } catch (const std::exception& e) {
            c.errors[rep] = e.what();
            c.rise[rep] = std::nan("");
          }
        }
      });
      for (auto& c : cells) {
        std::vector<double> ok, times, bws;
        for (int rep = 0; rep < cfg.replications; ++rep) {
          if (std::isfinite(c.rise[rep])) {
            ok.push_back(c.rise[rep]);
            bws.push_back(c.bandwidth[rep]);
          } else {
            ++c.failures;
          }
          if (std::isfinite(c.time_ms[rep]))
            times.push_back(c.time_ms[rep]);
        }
        c.median = median(ok);
        c.iqr = iqr(ok);
        double st = 0.0, sb = 0.0;
        for (double t : times)
          st += t;
        for (double b : bws)
          sb += b;
        c.mean_time_ms = times.empty() ? std::nan("") : st / times.size();
        c.mean_bandwidth = bws.empty() ? std::nan("") : sb / bws.size();
        if (progress) {
          std::ostringstream os;
          os << sm.id << " n=" << n << ' ' << to_string(c.method) << ": median " << c.median
             << ", IQR " << c.iqr << ", failures " << c.failures;
          progress(os.str());
        }
        out.cells.push_back(std::move(c));
      }
    }
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, const StudySummary& s)
{
  os << "model,n,method,median_rise,iqr_rise,mean_bandwidth,mean_time_ms,failures,boundary\n";
  char buf[256];
  for (const auto& c : s.cells) {
    int nb = 0;
    for (char b : c.boundary)
      nb += b;
    std::snprintf(buf, sizeof(buf), "%s,%d,%s,%.10g,%.10g,%.10g,%.6g,%d,%d\n", c.model.c_str(),
                  c.n, to_string(c.method).c_str(), c.median, c.iqr, c.mean_bandwidth,
                  c.mean_time_ms, c.failures, nb);
    os << buf;
  }
}

//! Median and IQR (both x 10^5) per model and method, one column pair per n.
inline void write_summary_markdown(std::ostream& os, const StudySummary& s)
{
  std::vector<std::string> models;
  std::vector<int> ns;
  std::vector<Method> methods;
  for (const auto& c : s.cells) {
    if (std::find(models.begin(), models.end(), c.model) == models.end())
      models.push_back(c.model);
    if (std::find(ns.begin(), ns.end(), c.n) == ns.end())
      ns.push_back(c.n);
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
      methods.push_back(c.method);
  }
  os << "RISE x 10^5\n\n| Model | Method |";
  for (int n : ns)
    os << " Median (n=" << n << ") | IQR (n=" << n << ") |";
  os << "\n|---|---|";
  for (std::size_t i = 0; i < ns.size(); ++i)
    os << "---:|---:|";
  os << '\n';
  char buf[64];
  for (const auto& m : models)
    for (Method me : methods) {
      os << "| " << m << " | " << to_string(me) << " |";
      for (int n : ns) {
        try {
          const auto& c = s.cell(m, n, me);
          std::snprintf(buf, sizeof(buf), " %.0f | %.0f |", c.median * 1e5, c.iqr * 1e5);
          os << buf;
        } catch (const std::out_of_range&) {
          os << " | |";
        }
      }
      os << '\n';
    }
}

inline void write_raw_csv(std::ostream& os, const CellResult& c)
{
  os << "rep,rise,bandwidth,time_ms,boundary,error\n";
  for (std::size_t i = 0; i < c.rise.size(); ++i) {
    std::string err = c.errors[i];
    std::replace(err.begin(), err.end(), ',', ';');
    os << i + 1 << ',' << fmt17(c.rise[i]) << ',' << fmt17(c.bandwidth[i]) << ','
       << fmt17(c.time_ms[i]) << ',' << int(c.boundary[i]) << ',' << err << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& v)
{
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v + ",") {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty())
        out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

} // namespace detail

//! key = value lines; '#' starts a comment. Models are preset ids (M1S1 ... M3S3).
inline StudyConfig read_study_config(std::istream& is)
{
  StudyConfig cfg;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw config_error("study config line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos)
      line.erase(h);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    if (eq == std::string::npos)
      fail("expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    try {
      if (key == "models") {
        cfg.models.clear();
        for (const auto& id : detail::split_list(val))
          cfg.models.push_back({ id, preset_model(id) });
      } else if (key == "sample_sizes") {
        cfg.sample_sizes.clear();
        for (const auto& s : detail::split_list(val))
          cfg.sample_sizes.push_back(std::stoi(s));
      } else if (key == "methods") {
        cfg.methods.clear();
        for (const auto& s : detail::split_list(val))
          cfg.methods.push_back(parse_method(s));
      } else if (key == "replications") {
        cfg.replications = std::stoi(val);
      } else if (key == "seed") {
        cfg.seed = std::stoull(val);
      } else if (key == "burnin") {
        cfg.burnin = std::stoi(val);
      } else if (key == "threads") {
        cfg.threads = val == "auto" ? default_threads() : std::stoi(val);
      } else if (key == "lambda_max") {
        cfg.quad.lambda_max = std::stod(val);
      } else if (key == "lambda_nodes") {
        cfg.quad.lambda_nodes = std::stoi(val);
      } else if (key == "theta_nodes") {
        cfg.quad.theta_nodes = std::stoi(val);
      } else if (key == "panels") {
        cfg.quad.panels = std::stoi(val);
      } else if (key == "whiten") {
        if (val != "true" && val != "false")
          fail("whiten must be true or false");
        cfg.whiten = val == "true";
      } else if (key == "b_lo") {
        cfg.b_lo = std::stod(val);
      } else if (key == "b_hi") {
        cfg.b_hi = std::stod(val);
      } else if (key == "grid_points") {
        cfg.grid_points = std::stoi(val);
      } else if (key == "tolerance") {
        cfg.tolerance = std::stod(val);
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const config_error&) {
      throw;
    } catch (const std::exception& e) {
      fail("bad value for '" + key + "': " + e.what());
    }
  }
  if (cfg.models.empty())
    throw config_error("study config: 'models' is required");
  if (cfg.sample_sizes.empty())
    throw config_error("study config: 'sample_sizes' is required");
  return cfg;
}

} // namespace wkde
