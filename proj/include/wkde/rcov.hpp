#pragma once

#include "estimators.hpp"
#include "io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wkde {

enum class MissingPolicy
{
  ForwardFill, //!< empty cells and skipped intervals take the last traded price
  DropInterval //!< rows with empty cells are dropped, skipped intervals left out
};

struct PriceConfig
{
  MissingPolicy missing = MissingPolicy::ForwardFill;
  int interval_seconds = 0; //!< 0 infers the most common within-day spacing
};

struct PriceRow
{
  std::string date;     //!< YYYY-MM-DD
  std::int64_t seconds; //!< seconds since midnight
  std::vector<double> prices;
  bool filled = false;  //!< synthesized or completed by forward fill
};

struct PriceTable
{
  std::vector<std::string> assets;
  std::vector<PriceRow> rows;
  int interval_seconds = 0;
  std::size_t filled_rows = 0;
  std::size_t dropped_rows = 0;
};

namespace detail {

//! Parses YYYY-MM-DD[T| ]HH:MM[:SS[.fff]][Z]; returns false on malformed input.
inline bool parse_timestamp(const std::string& s, std::string& date, std::int64_t& secs)
{
  int y, mo, d, h, mi;
  double sec = 0.0;
  char sep;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed) < 6)
    return false;
  if (sep != 'T' && sep != ' ')
    return false;
  std::string rest = s.substr(consumed);
  if (!rest.empty() && rest[0] == ':') {
    int c2 = 0;
    if (std::sscanf(rest.c_str(), ":%lf%n", &sec, &c2) < 1)
      return false;
    rest = rest.substr(c2);
  }
  if (!rest.empty() && rest != "Z")
    return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 ||
      sec >= 61)
    return false;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, mo, d);
  date = buf;
  secs = static_cast<std::int64_t>(h) * 3600 + mi * 60 + static_cast<std::int64_t>(std::llround(sec));
  return true;
}

} // namespace detail

//! Reads `timestamp,<asset1>,<asset2>,...`; errors carry the line number.
inline PriceTable parse_price_csv(std::istream& is, const PriceConfig& cfg = {})
{
  PriceTable tab;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<std::optional<double>> last;
  struct Raw
  {
    PriceRow row;
    std::vector<bool> missing;
    std::size_t line;
  };
  std::vector<Raw> raw;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#')
      continue;
    auto cells = split_csv(line);
    if (!have_header) {
      if (cells.size() < 2)
        throw data_error("price CSV line " + std::to_string(lineno) +
                         ": header needs timestamp and at least one asset");
      tab.assets.assign(cells.begin() + 1, cells.end());
      have_header = true;
      continue;
    }
    if (cells.size() != tab.assets.size() + 1)
      throw data_error("price CSV line " + std::to_string(lineno) + ": expected " +
                       std::to_string(tab.assets.size() + 1) + " fields");
    Raw r;
    r.line = lineno;
    if (!detail::parse_timestamp(cells[0], r.row.date, r.row.seconds))
      throw data_error("price CSV line " + std::to_string(lineno) + ": bad timestamp '" +
                       cells[0] + "'");
    r.row.prices.resize(tab.assets.size());
    r.missing.assign(tab.assets.size(), false);
    for (std::size_t k = 0; k < tab.assets.size(); ++k) {
      const std::string& c = cells[k + 1];
      if (c.empty() || c == "NA" || c == "NaN") {
        r.missing[k] = true;
        continue;
      }
      auto v = parse_double(c);
      if (!v || !std::isfinite(*v))
        throw data_error("price CSV line " + std::to_string(lineno) + ": bad price '" + c + "'");
      if (*v <= 0.0)
        throw data_error("price CSV line " + std::to_string(lineno) + ": nonpositive price");
      r.row.prices[k] = *v;
    }
    if (!raw.empty() && raw.back().row.date == r.row.date &&
        r.row.seconds <= raw.back().row.seconds)
      throw data_error("price CSV line " + std::to_string(lineno) +
                       ": timestamps not increasing within the day");
    raw.push_back(std::move(r));
  }
  if (!have_header || raw.empty())
    throw data_error("price CSV: no data rows");

  int step = cfg.interval_seconds;
  if (step <= 0) {
    std::map<std::int64_t, std::size_t> counts;
    for (std::size_t i = 1; i < raw.size(); ++i)
      if (raw[i].row.date == raw[i - 1].row.date)
        ++counts[raw[i].row.seconds - raw[i - 1].row.seconds];
    std::size_t best = 0;
    for (auto [gap, c] : counts)
      if (c > best) {
        best = c;
        step = static_cast<int>(gap);
      }
  }
  tab.interval_seconds = step;

  last.assign(tab.assets.size(), std::nullopt);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto& r = raw[i];
    const bool any_missing = std::find(r.missing.begin(), r.missing.end(), true) != r.missing.end();
    if (cfg.missing == MissingPolicy::DropInterval) {
      if (any_missing) {
        ++tab.dropped_rows;
        continue;
      }
      tab.rows.push_back(r.row);
      continue;
    }
    if (step > 0 && !tab.rows.empty() && tab.rows.back().date == r.row.date) {
      const PriceRow prev = tab.rows.back();
      for (std::int64_t t = prev.seconds + step; t < r.row.seconds; t += step) {
        PriceRow f = prev;
        f.seconds = t;
        f.filled = true;
        tab.rows.push_back(f);
        ++tab.filled_rows;
      }
    }
    for (std::size_t k = 0; k < r.missing.size(); ++k) {
      if (r.missing[k]) {
        if (!last[k])
          throw data_error("price CSV line " + std::to_string(r.line) + ": no earlier price for " +
                           tab.assets[k] + " to carry forward");
        r.row.prices[k] = *last[k];
        r.row.filled = true;
      }
      last[k] = r.row.prices[k];
    }
    if (r.row.filled)
      ++tab.filled_rows;
    tab.rows.push_back(r.row);
  }
  return tab;
}

inline PriceTable parse_price_csv(const std::string& path, const PriceConfig& cfg = {})
{
  std::ifstream in(path);
  if (!in)
    throw data_error("cannot open price file " + path);
  return parse_price_csv(in, cfg);
}

struct DayReturns
{
  std::string date;
  std::vector<Vector> returns;
};

//! ln P_t - ln P_{t-1} within each day; days with fewer than two rows are skipped.
inline std::vector<DayReturns> intraday_log_returns(const PriceTable& tab,
                                                    std::vector<std::string>* warnings = nullptr)
{
  std::vector<DayReturns> out;
  std::size_t i = 0;
  const std::size_t d = tab.assets.size();
  while (i < tab.rows.size()) {
    std::size_t j = i;
    while (j < tab.rows.size() && tab.rows[j].date == tab.rows[i].date)
      ++j;
    if (j - i < 2) {
      if (warnings)
        warnings->push_back("day " + tab.rows[i].date + " has fewer than two prices, skipped");
    } else {
      DayReturns day{ tab.rows[i].date, {} };
      for (std::size_t t = i + 1; t < j; ++t) {
        Vector r(d);
        for (std::size_t k = 0; k < d; ++k)
          r(k) = std::log(tab.rows[t].prices[k]) - std::log(tab.rows[t - 1].prices[k]);
        day.returns.push_back(r);
      }
      out.push_back(std::move(day));
    }
    i = j;
  }
  return out;
}

enum class RcNormalize
{
  None, //!< sum of outer products
  Count //!< divided by the number of returns
};

struct RcSeries
{
  std::vector<std::string> dates;
  std::vector<SymMatrix> matrices;
  std::vector<char> singular;
  std::vector<std::vector<std::optional<double>>> corr; //!< per day, pairs i<j in vecp order

  std::size_t size() const { return matrices.size(); }

  //! Strictly positive definite days only.
  SpdSeries to_spd(std::size_t* excluded = nullptr) const
  {
    std::vector<SpdMatrix> obs;
    std::vector<std::string> ts;
    std::size_t ex = 0;
    for (std::size_t i = 0; i < matrices.size(); ++i) {
      const auto e = sym_eigen(matrices[i]);
      const double lmax = e.values(0), lmin = e.values(e.values.size() - 1);
      if (!(lmin > 1e-12 * lmax) || singular[i]) {
        ++ex;
        continue;
      }
      obs.emplace_back(matrices[i]);
      ts.push_back(dates[i]);
    }
    if (excluded)
      *excluded = ex;
    if (obs.empty())
      throw data_error("no positive definite realized covariance matrices");
    return SpdSeries(std::move(obs), std::move(ts));
  }
};

inline RcSeries realized_cov_daily(const std::vector<DayReturns>& days,
                                   RcNormalize norm = RcNormalize::None)
{
  RcSeries out;
  for (const auto& day : days) {
    if (day.returns.empty())
      throw std::invalid_argument("realized_cov_daily: day " + day.date + " has no returns");
    const auto d = day.returns.front().size();
    Matrix rc = Matrix::Zero(d, d);
    for (const auto& r : day.returns)
      rc.noalias() += r * r.transpose();
    if (norm == RcNormalize::Count)
      rc /= static_cast<double>(day.returns.size());
    SymMatrix s(rc);
    const auto e = sym_eigen(s);
    const double lmax = e.values(0), lmin = e.values(d - 1);
    bool sing = !(lmin > 1e-12 * std::max(lmax, 0.0)) || lmax <= 0.0;
    if (lmin < 0.0) {
      Vector l = e.values.cwiseMax(0.0);
      s = SymMatrix(Matrix(e.vectors * l.asDiagonal() * e.vectors.transpose()));
      sing = true;
    }
    std::vector<std::optional<double>> c;
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j)
      for (Eigen::Index i = 0; i < j; ++i) {
        const double den = std::sqrt(s(i, i) * s(j, j));
        if (den > 0.0)
          c.push_back(std::clamp(s(i, j) / den, -1.0, 1.0));
        else
          c.push_back(std::nullopt);
      }
    out.dates.push_back(day.date);
    out.matrices.push_back(s);
    out.singular.push_back(sing);
    out.corr.push_back(std::move(c));
  }
  return out;
}

struct StatsRow
{
  std::string date;
  std::vector<double> variances;
  std::vector<std::optional<double>> correlations;
};

inline std::vector<StatsRow> series_stats(const RcSeries& rc)
{
  std::vector<StatsRow> out;
  for (std::size_t i = 0; i < rc.size(); ++i) {
    StatsRow r{ rc.dates[i], {}, rc.corr[i] };
    for (int k = 0; k < rc.matrices[i].dim(); ++k)
      r.variances.push_back(rc.matrices[i](k, k));
    out.push_back(std::move(r));
  }
  return out;
}

//! date,s11,s12,s22,... with 17 significant digits.
inline void write_rc_csv(std::ostream& os, const RcSeries& rc)
{
  if (rc.size() == 0) {
    os << "date\n";
    return;
  }
  write_series_csv(os, rc.matrices, rc.dates, "date");
}

//! date,var1,var2,corr for two assets; var<i> and corr<i><j> columns in general.
inline void write_stats_csv(std::ostream& os, const std::vector<StatsRow>& rows)
{
  os << "date";
  if (rows.empty()) {
    os << '\n';
    return;
  }
  const int d = static_cast<int>(rows.front().variances.size());
  for (int k = 1; k <= d; ++k)
    os << ",var" << k;
  if (d == 2)
    os << ",corr";
  else
    for (int j = 2; j <= d; ++j)
      for (int i = 1; i < j; ++i)
        os << ",corr" << i << j;
  os << '\n';
  for (const auto& r : rows) {
    os << r.date;
    for (double v : r.variances)
      os << ',' << fmt17(v);
    for (const auto& c : r.correlations)
      os << ',' << (c ? fmt17(*c) : std::string("NA"));
    os << '\n';
  }
}

} // namespace wkde
