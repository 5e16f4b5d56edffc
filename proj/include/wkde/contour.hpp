#pragma once

#include "estimators.hpp"
#include "io.hpp"
#include "stats.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

namespace wkde {

//! 2x2 evaluation grid: fixed correlations, log-spaced variances on both axes.
struct ContourGrid
{
  std::vector<double> rho{ 0.0 };
  double var_lo = 0.0;
  double var_hi = 0.0;
  int points = 50;
};

struct ContourPoint
{
  double s11;
  double s22;
  double rho;
  double log_density; //!< rescaled so the maximum within each rho panel is 0
};

struct ContourResult
{
  std::vector<ContourPoint> points;
  std::size_t excluded = 0; //!< grid points with |rho| >= 1
};

//! Variance range from half the 1% to twice the 99% quantile of the sample's diagonal entries.
inline ContourGrid default_contour_grid(const SpdSeries& s, std::vector<double> rho = { 0.0 }, int points = 50)
{
  if (s.dim != 2)
    throw dimension_error("contour grid needs 2x2 observations");
  std::vector<double> diag;
  for (const auto& x : s.observations) {
    diag.push_back(x(0, 0));
    diag.push_back(x(1, 1));
  }
  ContourGrid g;
  g.rho = std::move(rho);
  g.var_lo = 0.5 * quantile(diag, 0.01);
  g.var_hi = 2.0 * quantile(diag, 0.99);
  g.points = points;
  return g;
}

inline ContourResult density_contour(const KdeSpec& spec, const ContourGrid& g, int threads = 1)
{
  if (spec.dim() != 2)
    throw dimension_error("density contour needs a 2x2 estimator");
  if (!(g.var_lo > 0.0) || !(g.var_hi > g.var_lo) || g.points < 2)
    throw config_error("contour grid needs 0 < var_lo < var_hi and at least 2 points per axis");
  std::vector<double> axis(g.points);
  for (int i = 0; i < g.points; ++i)
    axis[i] = std::exp(std::log(g.var_lo) + (std::log(g.var_hi) - std::log(g.var_lo)) * i / (g.points - 1));
  ContourResult out;
  for (double rho : g.rho) {
    if (!(std::abs(rho) < 1.0)) {
      out.excluded += static_cast<std::size_t>(g.points) * g.points;
      continue;
    }
    std::vector<SpdMatrix> pts;
    pts.reserve(axis.size() * axis.size());
    for (double a : axis)
      for (double b : axis) {
        const double c = rho * std::sqrt(a * b);
        pts.push_back(SpdMatrix{ { a, c }, { c, b } });
      }
    const auto vals = eval_grid(spec, pts, threads);
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& v : vals)
      mx = std::max(mx, v.log_density);
    for (const auto& v : vals)
      out.points.push_back({ v.point(0, 0), v.point(1, 1), rho, v.log_density - mx });
  }
  return out;
}

inline void write_contour_csv(std::ostream& os, const ContourResult& r)
{
  os << "s11,s22,rho,log_density_rescaled\n";
  for (const auto& p : r.points)
    os << fmt17(p.s11) << ',' << fmt17(p.s22) << ',' << fmt17(p.rho) << ',' << fmt17(p.log_density) << '\n';
}

} // namespace wkde
