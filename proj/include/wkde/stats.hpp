#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wkde {

//! Linear-interpolation quantile (type 7).
inline double quantile(std::vector<double> v, double p)
{
  if (v.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

inline double median(const std::vector<double>& v)
{
  return quantile(v, 0.5);
}

inline double iqr(const std::vector<double>& v)
{
  return quantile(v, 0.75) - quantile(v, 0.25);
}

inline double normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

//! P(K > x) for the Kolmogorov distribution.
inline double kolmogorov_sf(double x)
{
  if (x <= 0.0)
    return 1.0;
  if (x < 0.2)
    return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17)
      break;
  }
  return std::clamp(s, 0.0, 1.0);
}

struct KsResult
{
  double statistic;
  double p_value;
};

//! One-sample Kolmogorov-Smirnov test; p-value via the Stephens-corrected
//! asymptotic distribution.
inline KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf)
{
  if (x.empty())
    throw std::invalid_argument("ks_test: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({ d, (i + 1) / n - f, f - i / n });
  }
  const double sn = std::sqrt(n);
  return { d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d) };
}

inline KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b)
{
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_test_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v)
      ++i;
    while (j < b.size() && b[j] <= v)
      ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return { d, kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d) };
}

} // namespace wkde
