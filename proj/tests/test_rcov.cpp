#include <wkde/rcov.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

using namespace wkde;

namespace {

std::string stamp(int day, int minutes)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "2023-%02d-%02dT%02d:%02d:00", 1 + day / 28, 1 + day % 28,
                4 + minutes / 60, minutes % 60);
  return buf;
}

//! 192 five-minute prices per day for two assets, geometric random walk.
std::string synthetic_prices(int days, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1e-3);
  std::ostringstream os;
  os << "timestamp,AAA,BBB\n";
  double a = 100, b = 50;
  for (int d = 0; d < days; ++d)
    for (int k = 0; k < 192; ++k) {
      const double e1 = z(rng), e2 = z(rng);
      a *= std::exp(e1);
      b *= std::exp(0.6 * e1 + 0.8 * e2);
      os << stamp(d, 5 * k) << ',' << fmt17(a) << ',' << fmt17(b) << '\n';
    }
  return os.str();
}

PriceTable parse(const std::string& s, const PriceConfig& cfg = {})
{
  std::istringstream in(s);
  return parse_price_csv(in, cfg);
}

} // namespace

TEST(Timestamp, Formats)
{
  std::string d;
  std::int64_t s = 0;
  EXPECT_TRUE(detail::parse_timestamp("2023-03-07T09:35:00", d, s));
  EXPECT_EQ(d, "2023-03-07");
  EXPECT_EQ(s, 9 * 3600 + 35 * 60);
  EXPECT_TRUE(detail::parse_timestamp("2023-03-07 16:00", d, s));
  EXPECT_EQ(s, 16 * 3600);
  EXPECT_TRUE(detail::parse_timestamp("2023-03-07T16:00:30Z", d, s));
  EXPECT_EQ(s, 16 * 3600 + 30);
  EXPECT_FALSE(detail::parse_timestamp("07/03/2023 16:00", d, s));
  EXPECT_FALSE(detail::parse_timestamp("2023-13-07T16:00", d, s));
  EXPECT_FALSE(detail::parse_timestamp("2023-03-07T16:00+01:00", d, s));
}

TEST(PriceCsv, FullSyntheticYear)
{
  const auto tab = parse(synthetic_prices(250, 1));
  EXPECT_EQ(tab.rows.size(), 48000u);
  EXPECT_EQ(tab.assets, (std::vector<std::string>{ "AAA", "BBB" }));
  EXPECT_EQ(tab.interval_seconds, 300);
  EXPECT_EQ(tab.filled_rows, 0u);
}

TEST(PriceCsv, Errors)
{
  EXPECT_THROW(parse(""), data_error);
  EXPECT_THROW(parse("timestamp,A\n"), data_error);
  try {
    parse("timestamp,A,B\n2023-01-02T09:00,1,2\n2023-01-02T09:05,1,-2\n");
    FAIL();
  } catch (const data_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    parse("timestamp,A,B\n2023-01-02T09:00,1,2\nnot-a-time,1,2\n");
    FAIL();
  } catch (const data_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse("timestamp,A,B\n2023-01-02T09:00,1,abc\n"), data_error);
  EXPECT_THROW(parse("timestamp,A,B\n2023-01-02T09:00,1\n"), data_error);
  EXPECT_THROW(parse("timestamp,A\n2023-01-02T09:05,1\n2023-01-02T09:00,1\n"), data_error);
  EXPECT_THROW(parse("timestamp,A\n2023-01-02T09:00,\n"), data_error);
}

TEST(PriceCsv, ForwardFillMissingInterval)
{
  const std::string s = "timestamp,A,B\n"
                        "2023-01-02T09:00,100,50\n"
                        "2023-01-02T09:05,101,51\n"
                        "2023-01-02T09:15,102,52\n"
                        "2023-01-02T09:20,,53\n";
  const auto tab = parse(s);
  ASSERT_EQ(tab.rows.size(), 5u);
  EXPECT_EQ(tab.filled_rows, 2u);
  EXPECT_EQ(tab.rows[2].seconds, 9 * 3600 + 10 * 60);
  EXPECT_TRUE(tab.rows[2].filled);
  EXPECT_EQ(tab.rows[4].prices[0], 102.0);
  const auto r = intraday_log_returns(tab);
  ASSERT_EQ(r.size(), 1u);
  ASSERT_EQ(r[0].returns.size(), 4u);
  EXPECT_EQ(r[0].returns[1](0), 0.0);
  EXPECT_EQ(r[0].returns[1](1), 0.0);
  EXPECT_EQ(r[0].returns[3](0), 0.0);

  const auto dropped = parse(s, { MissingPolicy::DropInterval, 0 });
  EXPECT_EQ(dropped.rows.size(), 3u);
  EXPECT_EQ(dropped.dropped_rows, 1u);
}

TEST(Returns, Basics)
{
  const auto tab = parse("timestamp,A,B\n"
                         "2023-01-02T09:00,100,7\n2023-01-02T09:05,101,7\n2023-01-02T09:10,101,7\n"
                         "2023-01-03T09:00,500,7\n");
  std::vector<std::string> warn;
  const auto r = intraday_log_returns(tab, &warn);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].returns.size(), 2u);
  EXPECT_NEAR(r[0].returns[0](0), std::log(1.01), 1e-15);
  EXPECT_EQ(r[0].returns[0](1), 0.0);
  ASSERT_EQ(warn.size(), 1u);
  EXPECT_NE(warn[0].find("2023-01-03"), std::string::npos);
}

TEST(RealizedCov, SingleAndOrthogonalReturns)
{
  Vector r(2);
  r << 0.01, -0.02;
  const auto one = realized_cov_daily({ { "d1", { r } } });
  EXPECT_LT((one.matrices[0].matrix() - r * r.transpose()).norm(), 1e-18);
  EXPECT_TRUE(one.singular[0]);
  Vector a(2), b(2);
  a << 0.03, 0;
  b << 0, 0.05;
  const auto orth = realized_cov_daily({ { "d1", { a, b } } });
  EXPECT_NEAR(orth.matrices[0](0, 0), 0.0009, 1e-18);
  EXPECT_NEAR(orth.matrices[0](1, 1), 0.0025, 1e-18);
  EXPECT_EQ(orth.matrices[0](0, 1), 0.0);
  EXPECT_FALSE(orth.singular[0]);
  ASSERT_TRUE(orth.corr[0][0].has_value());
  EXPECT_EQ(*orth.corr[0][0], 0.0);
  const auto norm = realized_cov_daily({ { "d1", { a, b } } }, RcNormalize::Count);
  EXPECT_NEAR(norm.matrices[0](0, 0), 0.00045, 1e-18);
}

TEST(RealizedCov, ZeroVarianceDay)
{
  const auto z = realized_cov_daily({ { "d1", { Vector::Zero(2), Vector::Zero(2) } } });
  EXPECT_TRUE(z.singular[0]);
  EXPECT_FALSE(z.corr[0][0].has_value());
  std::size_t excluded = 0;
  EXPECT_THROW(z.to_spd(&excluded), data_error);
  EXPECT_THROW(realized_cov_daily({ { "d1", {} } }), std::invalid_argument);
}

TEST(RealizedCov, LawOfLargeNumbers)
{
  Matrix c(2, 2);
  c << 1.0, 0.6, 0.6, 2.0;
  const Eigen::LLT<Matrix> llt(c);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::vector<DayReturns> days;
  const int k = 191;
  for (int d = 0; d < 100; ++d) {
    DayReturns day{ "d" + std::to_string(d), {} };
    for (int i = 0; i < k; ++i) {
      Vector e(2);
      e << z(rng), z(rng);
      day.returns.push_back(llt.matrixL() * e);
    }
    days.push_back(day);
  }
  const auto rc = realized_cov_daily(days);
  // E||RC/k - C||_F^2 = sum_ij (c_ij^2 + c_ii c_jj) / k for Gaussian returns
  double ms = 0, expect = 0;
  for (const auto& m : rc.matrices)
    ms += (m.matrix() / k - c).squaredNorm();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      expect += (c(i, j) * c(i, j) + c(i, i) * c(j, j)) / k;
  EXPECT_NEAR(ms / rc.size() / expect, 1.0, 0.2);
}

TEST(SeriesStats, Values)
{
  EXPECT_TRUE(series_stats(RcSeries{}).empty());
  Vector a(2), b(2);
  a << 2, 0;
  b << 0, 3;
  const auto rows = series_stats(realized_cov_daily({ { "d1", { a, b } } }));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].variances, (std::vector<double>{ 4, 9 }));
  EXPECT_EQ(*rows[0].correlations[0], 0.0);
  const auto tab = parse(synthetic_prices(20, 5));
  const auto rc = realized_cov_daily(intraday_log_returns(tab));
  for (const auto& r : series_stats(rc)) {
    ASSERT_TRUE(r.correlations[0]);
    EXPECT_LE(std::abs(*r.correlations[0]), 1.0);
    EXPECT_GT(*r.correlations[0], 0.3);
  }
}

TEST(Pipeline, DeterministicAndRoundTrips)
{
  const std::string prices = synthetic_prices(250, 9);
  const auto rc = realized_cov_daily(intraday_log_returns(parse(prices)));
  const auto rc2 = realized_cov_daily(intraday_log_returns(parse(prices)));
  ASSERT_EQ(rc.size(), 250u);
  for (std::size_t i = 0; i < rc.size(); ++i)
    EXPECT_EQ(rc.matrices[i].matrix(), rc2.matrices[i].matrix());
  std::size_t excluded = 99;
  const SpdSeries spd = rc.to_spd(&excluded);
  EXPECT_EQ(excluded, 0u);
  EXPECT_EQ(spd.size(), 250u);
  std::ostringstream os;
  write_rc_csv(os, rc);
  EXPECT_EQ(os.str().substr(0, 19), "date,s11,s12,s22\n20");
  std::istringstream in(os.str());
  const SpdSeries back = read_series_csv(in);
  ASSERT_EQ(back.size(), 250u);
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].matrix(), rc.matrices[i].matrix());
    EXPECT_EQ(back.timestamps[i], rc.dates[i]);
  }
  std::ostringstream st;
  write_stats_csv(st, series_stats(rc));
  EXPECT_EQ(st.str().substr(0, 24), "date,var1,var2,corr\n2023");
}
