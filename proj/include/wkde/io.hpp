#pragma once

#include "estimators.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace wkde {

//! 17 significant digits, enough to round-trip any double.
inline std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv(const std::string& line)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  }
  return out;
}

inline std::optional<double> parse_double(const std::string& s)
{
  if (s.empty())
    return std::nullopt;
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end)
    return std::nullopt;
  return v;
}

//! Column names s11, s12, s22, s13, ... in vecp order.
inline std::vector<std::string> vecp_column_names(int d)
{
  std::vector<std::string> out;
  for (int j = 1; j <= d; ++j)
    for (int i = 1; i <= j; ++i)
      out.push_back(d < 10 ? "s" + std::to_string(i) + std::to_string(j)
                           : "s" + std::to_string(i) + "_" + std::to_string(j));
  return out;
}

//! Series CSV: "# d=.. kappa=.." line when kappa is given, header `label,s11,...`, one vecp row per matrix.
inline void write_series_csv(std::ostream& os,
                             const std::vector<SymMatrix>& xs,
                             const std::vector<std::string>& labels,
                             const std::string& label_name = "t",
                             std::optional<int> kappa = std::nullopt)
{
  if (xs.empty())
    throw std::invalid_argument("write_series_csv: empty series");
  const int d = xs.front().dim();
  if (kappa)
    os << "# d=" << d << " kappa=" << *kappa << '\n';
  os << label_name;
  for (const auto& c : vecp_column_names(d))
    os << ',' << c;
  os << '\n';
  for (std::size_t t = 0; t < xs.size(); ++t) {
    os << (labels.empty() ? std::to_string(t + 1) : labels[t]);
    const HalfVec v = vecp(xs[t]);
    for (int k = 0; k < v.size(); ++k)
      os << ',' << fmt17(v(k));
    os << '\n';
  }
}

inline void write_series_csv(std::ostream& os,
                             const SpdSeries& s,
                             const std::string& label_name = "t",
                             std::optional<int> kappa = std::nullopt)
{
  std::vector<SymMatrix> xs;
  xs.reserve(s.size());
  for (const auto& x : s.observations)
    xs.push_back(x.sym());
  write_series_csv(os, xs, s.timestamps, label_name, kappa);
}

//! Reads the series CSV written above (also the realized-covariance CSV).
//! Rows that are not positive definite raise data_error with the line number.
inline SpdSeries read_series_csv(std::istream& is)
{
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<SpdMatrix> obs;
  std::vector<std::string> labels;
  int d = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line == "\r")
      continue;
    auto cells = split_csv(line);
    if (header.empty()) {
      header = cells;
      if (header.size() < 2)
        throw data_error("series CSV: header needs a label column and vecp columns");
      try {
        d = dim_from_half(header.size() - 1);
      } catch (const dimension_error&) {
        throw data_error("series CSV: number of value columns is not triangular");
      }
      continue;
    }
    if (cells.size() != header.size())
      throw data_error("series CSV line " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields");
    HalfVec v(half_dim(d));
    for (int k = 0; k < v.size(); ++k) {
      auto x = parse_double(cells[k + 1]);
      if (!x || !std::isfinite(*x))
        throw data_error("series CSV line " + std::to_string(lineno) + ": bad number '" +
                         cells[k + 1] + "'");
      v(k) = *x;
    }
    try {
      obs.emplace_back(vecp_inv(v));
    } catch (const domain_error& e) {
      throw data_error("series CSV line " + std::to_string(lineno) + ": " + e.what());
    }
    labels.push_back(cells[0]);
  }
  if (obs.empty())
    throw data_error("series CSV: no observations");
  return SpdSeries(std::move(obs), std::move(labels));
}

inline void write_grid_csv(std::ostream& os, const std::vector<GridValue>& g)
{
  if (g.empty()) {
    os << "log_density\n";
    return;
  }
  const int d = g.front().point.dim();
  for (const auto& c : vecp_column_names(d))
    os << c << ',';
  os << "log_density\n";
  for (const auto& v : g) {
    const HalfVec p = vecp(v.point);
    for (int k = 0; k < p.size(); ++k)
      os << fmt17(p(k)) << ',';
    os << fmt17(v.log_density) << '\n';
  }
}

inline nlohmann::json grid_to_json(const std::vector<GridValue>& g)
{
  auto arr = nlohmann::json::array();
  for (const auto& v : g) {
    const HalfVec p = vecp(v.point);
    arr.push_back({ { "vecp", std::vector<double>(p.data(), p.data() + p.size()) },
                    { "log_density", v.log_density } });
  }
  return arr;
}

} // namespace wkde
