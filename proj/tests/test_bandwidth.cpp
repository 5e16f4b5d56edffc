#include <wkde/bandwidth.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace wkde;

namespace {

SpdMatrix s1(double x)
{
  return SpdMatrix{ { x } };
}

SpdSeries scalar_series(const std::vector<double>& xs)
{
  std::vector<SpdMatrix> obs;
  for (double x : xs)
    obs.push_back(s1(x));
  return SpdSeries(obs);
}

SpdSeries wishart_series(int n, const WishartParams& p, std::mt19937_64& rng)
{
  std::vector<SpdMatrix> obs;
  for (int i = 0; i < n; ++i)
    obs.push_back(sample_wishart(p, rng));
  return SpdSeries(obs);
}

double gamma_kernel(double b, double s, double x)
{
  const double k = 1 / (2 * b) + 1, th = 2 * b * s;
  return std::exp((k - 1) * std::log(x) - x / th - std::lgamma(k) - k * std::log(th));
}

double gauss(double b, double m, double y)
{
  return std::exp(-0.5 * (y - m) * (y - m) / b) / std::sqrt(2 * std::numbers::pi * b);
}

} // namespace

TEST(SquaredIntegral, AnalyticCases)
{
  EXPECT_NEAR(std::exp(squared_integral_wishart(scalar_series({ 1.0 }), 0.5)), 0.25, 1e-12);
  for (double x : { 0.2, 1.0, 7.0 })
    EXPECT_NEAR(std::exp(squared_integral_loggauss(scalar_series({ x }), 1.0)),
                1 / (2 * std::sqrt(std::numbers::pi)), 1e-12);
  const SpdSeries one({ SpdMatrix{ { 2, 0.5 }, { 0.5, 1 } } });
  EXPECT_NEAR(std::exp(squared_integral_loggauss(one, 0.5)),
              1 / (std::pow(2 * std::numbers::pi * 0.5, 1.5) * 2), 1e-12);
}

TEST(SquaredIntegral, WishartMatchesQuadrature)
{
  const std::vector<double> xs = { 0.7, 2.3 };
  const auto sample = scalar_series(xs);
  boost::math::quadrature::exp_sinh<double> q;
  for (double b : { 0.05, 0.1, 0.5 }) {
    auto f2 = [&](double s) {
      double f = 0;
      for (double x : xs)
        f += gamma_kernel(b, s, x);
      f /= xs.size();
      return f * f;
    };
    const double ref = q.integrate(f2, 1e-14);
    EXPECT_NEAR(std::exp(squared_integral_wishart(sample, b)) / ref, 1.0, 1e-6) << b;
  }
}

TEST(SquaredIntegral, LogGaussMatchesQuadrature)
{
  const std::vector<double> xs = { 0.7, 2.3, 1.1 };
  const auto sample = scalar_series(xs);
  boost::math::quadrature::sinh_sinh<double> q;
  for (double b : { 0.05, 0.1, 0.5 }) {
    auto g2 = [&](double y) {
      double g = 0;
      for (double x : xs)
        g += gauss(b, std::log(x), y);
      g /= xs.size();
      return g * g;
    };
    const double ref = q.integrate(g2, 1e-14);
    EXPECT_NEAR(std::exp(squared_integral_loggauss(sample, b)) / ref, 1.0, 1e-8) << b;
  }
}

TEST(SquaredIntegral, SummandSymmetry)
{
  std::mt19937_64 rng(3);
  const auto a = wishart_series(5, { 4.0, SpdMatrix::identity(2) }, rng);
  auto rev = a.observations;
  std::reverse(rev.begin(), rev.end());
  for (double b : { 0.01, 0.3 }) {
    EXPECT_NEAR(squared_integral_wishart(a, b), squared_integral_wishart(SpdSeries(rev), b), 1e-12);
    EXPECT_NEAR(squared_integral_loggauss(a, b), squared_integral_loggauss(SpdSeries(rev), b), 1e-12);
  }
}

TEST(Lscv, TwoPointHandFormula)
{
  const SpdMatrix x1{ { 1.2, 0.3 }, { 0.3, 0.8 } }, x2{ { 2.0, -0.4 }, { -0.4, 1.5 } };
  const SpdSeries s({ x1, x2 });
  const double b = 0.3;
  const double kw = std::exp(wishart_logpdf(kernel_params(b, x1).wishart(), x2)) +
                    std::exp(wishart_logpdf(kernel_params(b, x2).wishart(), x1));
  EXPECT_NEAR(lscv_criterion(s, Kernel::Wishart, b, 1),
              std::exp(squared_integral_wishart(s, b)) - kw, 1e-12);
  const double d2 = (matrix_log(x1).matrix() - matrix_log(x2).matrix()).squaredNorm();
  const double g = std::exp(-d2 / (2 * b)) / (std::pow(2 * std::numbers::pi * b, 1.5) * std::pow(2.0, -0.5));
  EXPECT_NEAR(lscv_criterion(s, Kernel::LogGaussian, b, 1),
              std::exp(squared_integral_loggauss(s, b)) - 2 * g, 1e-12);
}

TEST(Lscv, ReversalInvariance)
{
  std::mt19937_64 rng(4);
  const auto a = wishart_series(30, { 4.0, SpdMatrix::identity(2) }, rng);
  auto rev = a.observations;
  std::reverse(rev.begin(), rev.end());
  for (Kernel k : { Kernel::Wishart, Kernel::LogGaussian })
    for (int h : { 1, 3 })
      EXPECT_NEAR(lscv_criterion(a, k, 0.1, h), lscv_criterion(SpdSeries(rev), k, 0.1, h), 1e-12);
}

TEST(Lscv, NoPairsNamesIndex)
{
  const auto s = scalar_series({ 1.0, 2.0, 3.0 });
  try {
    lscv_criterion(s, Kernel::Wishart, 0.1, 2);
    FAIL();
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("s = 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(lscv_criterion(s, Kernel::Wishart, 0.1, 0), config_error);
}

TEST(Lscv, SecondTermEstimatesExpectedEstimate)
{
  std::mt19937_64 rng(5);
  const WishartParams f{ 4.0, s1(1.0) };
  const auto sample = wishart_series(400, f, rng);
  const double b = 0.1;
  const CvObjective obj(sample, Kernel::Wishart);
  const double term = 0.5 * (std::exp(obj.log_squared_integral(b)) - obj.lscv(b, 1));
  // sample spread of the leave-one-out values gives the standard error of `term`
  std::vector<double> loo(sample.size());
  for (std::size_t s = 0; s < sample.size(); ++s) {
    double acc = 0;
    for (std::size_t t = 0; t < sample.size(); ++t)
      if (t != s)
        acc += std::exp(obj.log_kernel(s, t, b));
    loo[s] = acc / (sample.size() - 1);
  }
  double m = 0, v = 0;
  for (double x : loo)
    m += x;
  m /= loo.size();
  for (double x : loo)
    v += (x - m) * (x - m);
  const double se = std::sqrt(v / (loo.size() - 1) / loo.size());
  EXPECT_NEAR(m, term, 1e-12);
  const KdeSpec k(Kernel::Wishart, sample, b);
  const int mc = 100000;
  double e = 0, e2 = 0;
  for (int i = 0; i < mc; ++i) {
    const double y = std::exp(k.log_eval(sample_wishart(f, rng)));
    e += y;
    e2 += y * y;
  }
  e /= mc;
  const double se_mc = std::sqrt((e2 / mc - e * e) / mc);
  EXPECT_NEAR(term, e, 3 * std::hypot(se, se_mc));
}

TEST(Lcv, TwoPointsAndDuplicates)
{
  const SpdMatrix x1{ { 1.2, 0.3 }, { 0.3, 0.8 } }, x2{ { 2.0, -0.4 }, { -0.4, 1.5 } };
  const double b = 0.2;
  const double expect = 0.5 * (wishart_logpdf(kernel_params(b, x1).wishart(), x2) +
                               wishart_logpdf(kernel_params(b, x2).wishart(), x1));
  EXPECT_NEAR(lcv_criterion(SpdSeries({ x1, x2 }), Kernel::Wishart, b), expect, 1e-12);
  const SpdSeries dup(std::vector<SpdMatrix>(5, x1));
  EXPECT_NEAR(lcv_criterion(dup, Kernel::Wishart, b),
              wishart_logpdf(kernel_params(b, x1).wishart(), x1), 1e-12);
  EXPECT_NEAR(lcv_criterion(dup, Kernel::LogGaussian, b),
              KdeSpec(Kernel::LogGaussian, SpdSeries({ x1 }), b).log_eval(x1), 1e-12);
  EXPECT_THROW(lcv_criterion(SpdSeries({ x1 }), Kernel::Wishart, b), std::invalid_argument);
}

TEST(Lcv, ScalarReference)
{
  const std::vector<double> xs = { 0.3, 1.1, 2.7, 0.05, 4.2, 1.9 };
  const auto sample = scalar_series(xs);
  for (double b : { 0.03, 0.4 }) {
    double w = 0, lg = 0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      double fw = 0, fg = 0;
      for (std::size_t s = 0; s < xs.size(); ++s)
        if (s != t) {
          fw += gamma_kernel(b, xs[t], xs[s]);
          fg += gauss(b, std::log(xs[s]), std::log(xs[t])) / xs[t];
        }
      w += std::log(fw / (xs.size() - 1));
      lg += std::log(fg / (xs.size() - 1));
    }
    w /= xs.size();
    lg /= xs.size();
    EXPECT_NEAR(lcv_criterion(sample, Kernel::Wishart, b), w, 1e-10 * std::abs(w));
    EXPECT_NEAR(lcv_criterion(sample, Kernel::LogGaussian, b), lg, 1e-10 * std::abs(lg));
  }
}

TEST(DefaultLag, Values)
{
  EXPECT_EQ(default_lag(250), 4);
  EXPECT_EQ(default_lag(100), 4);
  EXPECT_EQ(default_lag(16), 2);
  EXPECT_EQ(default_lag(17), 3);
  EXPECT_EQ(default_lag(81), 3);
  EXPECT_EQ(default_lag(1), 1);
  EXPECT_EQ(default_lag(10000), 10);
  EXPECT_THROW(default_lag(0), std::invalid_argument);
}

TEST(Minimizer, RecoversQuadraticMinimum)
{
  for (double bstar : { 3e-4, 0.0213, 0.5, 7.0 }) {
    auto f = [&](double b) { return std::pow(std::log(b / bstar), 2) - 3.0; };
    const auto r = minimize_bandwidth(f, 1e-4, 10, 25, 1e-3);
    EXPECT_FALSE(r.at_boundary);
    EXPECT_NEAR(r.b / bstar, 1.0, 1e-3) << bstar;
    ASSERT_EQ(r.curve.size(), 25u);
    for (std::size_t i = 1; i < r.curve.size(); ++i)
      EXPECT_GT(r.curve[i].b, r.curve[i - 1].b);
    EXPECT_NEAR(r.curve.front().b, 1e-4, 1e-16);
    EXPECT_NEAR(r.curve.back().b, 10.0, 1e-12);
  }
}

TEST(Minimizer, BoundaryFlagAndConfigErrors)
{
  const auto r = minimize_bandwidth([](double b) { return b; }, 1e-4, 10, 25, 1e-3);
  EXPECT_TRUE(r.at_boundary);
  EXPECT_NEAR(r.b, 1e-4, 1e-16);
  const auto nan_hi = minimize_bandwidth(
    [](double b) { return b > 1 ? std::nan("") : std::pow(std::log(b / 0.01), 2); }, 1e-4, 10, 25, 1e-3);
  EXPECT_NEAR(nan_hi.b, 0.01, 1e-5);
  EXPECT_THROW(minimize_bandwidth([](double b) { return b; }, 1.0, 0.5, 25, 1e-3), config_error);
  EXPECT_THROW(minimize_bandwidth([](double b) { return b; }, 1e-4, 1, 2, 1e-3), config_error);
}

TEST(SelectBandwidth, LcvIsNegatedMinimization)
{
  std::mt19937_64 rng(6);
  const auto sample = wishart_series(60, { 4.0, SpdMatrix::identity(2) }, rng);
  for (Kernel k : { Kernel::Wishart, Kernel::LogGaussian }) {
    CvConfig cfg;
    cfg.method = CvMethod::LCV;
    cfg.kernel = k;
    const CvObjective obj(sample, k);
    const auto r = select_bandwidth(obj, cfg);
    EXPECT_NEAR(r.value, obj.lcv(r.b), 1e-12);
    for (const auto& p : r.curve)
      EXPECT_LE(p.value, r.value + 1e-12);
    const auto direct = minimize_bandwidth([&](double b) { return -obj.lcv(b); }, cfg.b_lo, cfg.b_hi,
                                           cfg.grid_points, cfg.tolerance);
    EXPECT_EQ(direct.b, r.b);
  }
}

TEST(SelectBandwidth, DeterministicAndThreadIndependent)
{
  std::mt19937_64 rng(7);
  const auto sample = wishart_series(80, { 4.0, SpdMatrix::identity(2) }, rng);
  CvConfig cfg;
  const auto a = select_bandwidth(sample, cfg);
  cfg.threads = 3;
  const auto b = select_bandwidth(sample, cfg);
  EXPECT_EQ(a.b, b.b);
  EXPECT_EQ(a.value, b.value);
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i)
    EXPECT_EQ(a.curve[i].value, b.curve[i].value);
}

TEST(SelectBandwidth, LscvInteriorForIidWishart)
{
  std::mt19937_64 rng(8);
  int interior = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    const auto sample = wishart_series(200, { 4.0, SpdMatrix::identity(2) }, rng);
    CvConfig cfg;
    cfg.lag = 1;
    cfg.b_lo = 1e-3;
    cfg.b_hi = 1.0;
    interior += !select_bandwidth(sample, cfg).at_boundary;
  }
  EXPECT_GE(interior, 48);
}

TEST(Criteria, FiniteAcrossFullGrid)
{
  std::mt19937_64 rng(9);
  const auto sample = wishart_series(300, { 4.0, SpdMatrix::identity(2) }, rng);
  for (Kernel k : { Kernel::Wishart, Kernel::LogGaussian }) {
    const CvObjective obj(sample, k);
    for (int i = 0; i < 25; ++i) {
      const double b = 1e-4 * std::pow(1e5, i / 24.0);
      EXPECT_TRUE(std::isfinite(obj.lscv(b, 5))) << b;
      EXPECT_TRUE(std::isfinite(obj.lcv(b))) << b;
      EXPECT_TRUE(std::isfinite(obj.log_squared_integral(b))) << b;
    }
  }
}

TEST(CurveCsv, Format)
{
  std::ostringstream os;
  write_curve_csv(os, { { 0.1, -2.5 }, { 1.0, 3.0 } });
  EXPECT_EQ(os.str(), "b,value\n0.10000000000000001,-2.5\n1,3\n");
}
