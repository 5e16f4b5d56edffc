//! wkde command-line tool: simulate, bandwidth, density, study, rcov.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure (including more than 10% failed study replications).

#include <wkde/wkde.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace wkde;

namespace {

struct usage_error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& s, const char* what)
{
  std::vector<double> out;
  for (const auto& cell : split_csv(s)) {
    auto v = parse_double(cell);
    if (!v)
      throw usage_error(std::string(what) + ": bad number '" + cell + "'");
    out.push_back(*v);
  }
  return out;
}

//! Row-major square matrix from "a,b,c,d".
Matrix parse_square(const std::string& s, const char* what)
{
  const auto v = parse_numbers(s, what);
  int d = 1;
  while (d * d < static_cast<int>(v.size()))
    ++d;
  if (d * d != static_cast<int>(v.size()))
    throw usage_error(std::string(what) + ": expected d*d comma-separated entries");
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      m(i, j) = v[i * d + j];
  return m;
}

Kernel parse_kernel(const std::string& s)
{
  if (s == "wishart" || s == "w")
    return Kernel::Wishart;
  if (s == "lg" || s == "loggauss")
    return Kernel::LogGaussian;
  throw usage_error("unknown kernel '" + s + "' (expected wishart or lg)");
}

CvMethod parse_cv(const std::string& s)
{
  if (s == "lscv")
    return CvMethod::LSCV;
  if (s == "lcv")
    return CvMethod::LCV;
  throw usage_error("unknown method '" + s + "' (expected lscv or lcv)");
}

SpdSeries read_series(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw data_error("cannot open " + path);
  return read_series_csv(in);
}

std::ofstream open_out(const fs::path& path)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os)
    throw data_error("cannot write " + path.string());
  return os;
}

void print_matrix(std::ostream& os, const std::string& name, const Matrix& m)
{
  os << name << " =";
  for (int i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : " [");
    for (int j = 0; j < m.cols(); ++j)
      os << (j ? ", " : "") << fmt17(m(i, j));
  }
  os << "]\n";
}

// ---------------------------------------------------------------- simulate
struct SimulateArgs
{
  std::string preset;
  std::string m, sigma;
  int kappa = 4;
  int n = 0;
  int burnin = 200;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a)
{
  WarModel model;
  if (!a.preset.empty()) {
    if (!a.m.empty() || !a.sigma.empty())
      throw usage_error("--preset cannot be combined with --m/--sigma");
    try {
      model = preset_model(a.preset);
    } catch (const std::invalid_argument& e) {
      throw usage_error(e.what());
    }
  } else {
    if (a.m.empty() || a.sigma.empty())
      throw usage_error("give --preset or both --m and --sigma");
    model.m = parse_square(a.m, "--m");
    const Matrix s = parse_square(a.sigma, "--sigma");
    if (s.rows() != model.m.rows())
      throw usage_error("--m and --sigma differ in dimension");
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * s.cwiseAbs().maxCoeff())
      throw usage_error("--sigma is not symmetric");
    try {
      model.sigma = SpdMatrix(s);
    } catch (const not_positive_definite&) {
      throw usage_error("--sigma is not positive definite");
    }
    model.kappa = a.kappa;
  }
  SpdMatrix sinf;
  try {
    sinf = lyapunov_stationary(model.m, model.sigma);
  } catch (const std::exception& e) {
    throw usage_error(std::string("invalid model: ") + e.what());
  }
  std::seed_seq ss{ static_cast<std::uint32_t>(a.seed), static_cast<std::uint32_t>(a.seed >> 32) };
  std::mt19937_64 rng(ss);
  const auto series = war1_simulate(model, a.n, a.burnin, rng);

  std::ostream& info = a.out.empty() ? std::cerr : std::cout;
  print_matrix(info, "Sigma_inf", sinf.matrix());
  info << "kappa = " << model.kappa << '\n';
  info << "lyapunov residual = " << lyapunov_residual(model.m, model.sigma, sinf) << '\n';
  if (a.out.empty()) {
    write_series_csv(std::cout, series, "t", model.kappa);
  } else {
    auto os = open_out(a.out);
    write_series_csv(os, series, "t", model.kappa);
  }
  return 0;
}

// ---------------------------------------------------------------- bandwidth
struct BandwidthArgs
{
  std::string input;
  std::string kernel = "wishart";
  std::string method = "lscv";
  int lag = 0;
  double b_lo = 1e-4;
  double b_hi = 10.0;
  int grid_points = 25;
  double tolerance = 1e-3;
  std::string curve;
};

CvConfig cv_config(const BandwidthArgs& a, int threads)
{
  CvConfig cfg;
  cfg.kernel = parse_kernel(a.kernel);
  cfg.method = parse_cv(a.method);
  cfg.lag = a.lag;
  cfg.b_lo = a.b_lo;
  cfg.b_hi = a.b_hi;
  cfg.grid_points = a.grid_points;
  cfg.tolerance = a.tolerance;
  cfg.threads = threads;
  if (!(cfg.b_lo > 0) || !(cfg.b_hi > cfg.b_lo) || cfg.grid_points < 3 || !(cfg.tolerance > 0))
    throw usage_error("need 0 < --b-lo < --b-hi, --grid-points >= 3, --tolerance > 0");
  return cfg;
}

BandwidthResult run_bandwidth(const SpdSeries& series, const BandwidthArgs& a, int threads)
{
  const CvConfig cfg = cv_config(a, threads);
  const int h = cfg.lag > 0 ? cfg.lag : default_lag(static_cast<int>(series.size()));
  const auto res = select_bandwidth(series, cfg);
  std::cout << "n = " << series.size() << ", kernel = " << to_string(cfg.kernel)
            << ", method = " << to_string(cfg.method);
  if (cfg.method == CvMethod::LSCV)
    std::cout << ", h = " << h;
  std::cout << "\nb* = " << fmt17(res.b) << "\ncriterion = " << fmt17(res.value) << '\n';
  if (res.at_boundary)
    std::cerr << "warning: optimum at the search boundary [" << cfg.b_lo << ", " << cfg.b_hi << "]\n";
  if (!a.curve.empty()) {
    auto os = open_out(a.curve);
    write_curve_csv(os, res.curve);
  }
  return res;
}

// ---------------------------------------------------------------- density
struct DensityArgs
{
  std::string input;
  std::string kernel = "wishart";
  double bandwidth = 0.0;
  std::string rho = "0";
  double var_lo = 0.0;
  double var_hi = 0.0;
  int points = 50;
  std::string grid;
  std::string out;
};

void run_density(const SpdSeries& series, const DensityArgs& a, int threads)
{
  if (!(a.bandwidth > 0))
    throw usage_error("--bandwidth must be positive");
  const KdeSpec spec(parse_kernel(a.kernel), series, a.bandwidth);
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!a.out.empty()) {
    file = open_out(a.out);
    os = &file;
  }
  if (!a.grid.empty()) {
    const SpdSeries pts = read_series(a.grid);
    if (pts.dim != series.dim)
      throw data_error("grid points and sample differ in dimension");
    write_grid_csv(*os, eval_grid(spec, pts.observations, threads));
    return;
  }
  if (series.dim != 2)
    throw usage_error("contour output needs 2x2 data; use --grid for other dimensions");
  ContourGrid g = default_contour_grid(series, parse_numbers(a.rho, "--rho"), a.points);
  if (a.var_lo > 0)
    g.var_lo = a.var_lo;
  if (a.var_hi > 0)
    g.var_hi = a.var_hi;
  const auto res = density_contour(spec, g, threads);
  write_contour_csv(*os, res);
  std::cerr << res.points.size() << " grid points written";
  if (res.excluded)
    std::cerr << ", " << res.excluded << " excluded (|rho| >= 1)";
  std::cerr << '\n';
}

// ---------------------------------------------------------------- study
struct StudyArgs
{
  std::string config;
  std::string out_dir;
  std::optional<int> replications;
  std::optional<std::uint64_t> seed;
};

int cmd_study(const StudyArgs& a, int threads)
{
  std::ifstream in(a.config);
  if (!in)
    throw config_error("cannot open study config " + a.config);
  StudyConfig cfg = read_study_config(in);
  if (a.replications)
    cfg.replications = *a.replications;
  if (a.seed)
    cfg.seed = *a.seed;
  cfg.threads = threads;
  const auto summary = simulation_study(cfg, [](const std::string& msg) { std::cerr << msg << '\n'; });

  const fs::path dir(a.out_dir);
  {
    auto os = open_out(dir / "summary.csv");
    write_summary_csv(os, summary);
  }
  {
    auto os = open_out(dir / "summary.md");
    write_summary_markdown(os, summary);
  }
  int total = 0;
  for (const auto& c : summary.cells) {
    auto os = open_out(dir / "raw" / (c.model + "_n" + std::to_string(c.n) + "_" + to_string(c.method) + ".csv"));
    write_raw_csv(os, c);
    total += static_cast<int>(c.rise.size());
  }
  write_summary_markdown(std::cout, summary);
  const int failed = summary.total_failures();
  if (failed) {
    std::cerr << "warning: " << failed << " of " << total << " replications failed\n";
    for (const auto& c : summary.cells)
      for (const auto& e : c.errors)
        if (!e.empty())
          std::cerr << "  " << c.model << " n=" << c.n << " " << to_string(c.method) << ": " << e << '\n';
  }
  return failed * 10 > total ? 3 : 0;
}

// ---------------------------------------------------------------- rcov
struct RcovArgs
{
  std::string prices;
  std::string out_dir;
  std::string missing = "ffill";
  int interval = 0;
  std::string normalize = "none";
  bool bandwidth = false;
  bool density = false;
};

int cmd_rcov(const RcovArgs& a, BandwidthArgs bw, DensityArgs den, int threads)
{
  PriceConfig pc;
  if (a.missing == "ffill")
    pc.missing = MissingPolicy::ForwardFill;
  else if (a.missing == "drop")
    pc.missing = MissingPolicy::DropInterval;
  else
    throw usage_error("--missing must be ffill or drop");
  pc.interval_seconds = a.interval;
  RcNormalize norm;
  if (a.normalize == "none")
    norm = RcNormalize::None;
  else if (a.normalize == "count")
    norm = RcNormalize::Count;
  else
    throw usage_error("--rc-normalize must be none or count");

  const auto tab = parse_price_csv(a.prices, pc);
  std::vector<std::string> warnings;
  const auto days = intraday_log_returns(tab, &warnings);
  for (const auto& w : warnings)
    std::cerr << "warning: " << w << '\n';
  const auto rc = realized_cov_daily(days, norm);
  const fs::path dir(a.out_dir);
  {
    auto os = open_out(dir / "rc_series.csv");
    write_rc_csv(os, rc);
  }
  {
    auto os = open_out(dir / "rc_stats.csv");
    write_stats_csv(os, series_stats(rc));
  }
  std::size_t excluded = 0;
  std::cout << tab.rows.size() << " price rows (" << tab.filled_rows << " filled, " << tab.dropped_rows
            << " dropped), " << rc.size() << " daily matrices\n";
  if (!a.bandwidth && !a.density)
    return 0;
  const SpdSeries series = rc.to_spd(&excluded);
  if (excluded)
    std::cerr << "warning: " << excluded << " singular days left out of the estimator\n";
  double b = den.bandwidth;
  if (a.bandwidth || !(b > 0)) {
    if (bw.curve.empty())
      bw.curve = (dir / "bandwidth_curve.csv").string();
    b = run_bandwidth(series, bw, threads).b;
  }
  if (a.density) {
    den.bandwidth = b;
    if (den.out.empty())
      den.out = (dir / "density_contour.csv").string();
    run_density(series, den, threads);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Wishart kernel density estimation on positive definite matrices" };
  app.require_subcommand(1);
  int threads = default_threads();
  app.add_option("--threads", threads, "worker threads (default: WKDE_THREADS or all cores)")
    ->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "simulate a WAR(1) series");
  simulate->add_option("--preset", sim.preset, "benchmark model M1S1 ... M3S3");
  simulate->add_option("--m", sim.m, "autoregressive matrix, row-major, comma-separated");
  simulate->add_option("--sigma", sim.sigma, "innovation covariance, row-major, comma-separated");
  simulate->add_option("--kappa", sim.kappa, "degrees of freedom (number of chains)")->check(CLI::PositiveNumber);
  simulate->add_option("--n", sim.n, "series length")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--burnin", sim.burnin, "discarded initial steps")->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--out", sim.out, "output CSV (default: stdout)");

  BandwidthArgs bw;
  auto add_bw_options = [&bw](CLI::App* c) {
    c->add_option("--kernel", bw.kernel, "wishart or lg");
    c->add_option("--method", bw.method, "lscv or lcv");
    c->add_option("--lag", bw.lag, "LSCV lag h (default ceil(n^(1/4)))")->check(CLI::NonNegativeNumber);
    c->add_option("--b-lo", bw.b_lo, "lower end of the search interval");
    c->add_option("--b-hi", bw.b_hi, "upper end of the search interval");
    c->add_option("--grid-points", bw.grid_points, "coarse log grid size");
    c->add_option("--tolerance", bw.tolerance, "relative tolerance on b");
    c->add_option("--curve", bw.curve, "write the criterion curve CSV here");
  };
  auto* bandwidth = app.add_subcommand("bandwidth", "cross-validated bandwidth selection");
  bandwidth->add_option("--input", bw.input, "series CSV")->required();
  add_bw_options(bandwidth);

  DensityArgs den;
  auto add_density_options = [&den](CLI::App* c) {
    c->add_option("--rho", den.rho, "comma-separated correlations for the contour panels");
    c->add_option("--var-lo", den.var_lo, "smallest variance on each axis (default from data)");
    c->add_option("--var-hi", den.var_hi, "largest variance on each axis (default from data)");
    c->add_option("--points", den.points, "grid points per axis")->check(CLI::Range(2, 100000));
  };
  auto* density = app.add_subcommand("density", "evaluate the estimator on a contour grid or given points");
  density->add_option("--input", den.input, "series CSV")->required();
  density->add_option("--kernel", den.kernel, "wishart or lg");
  density->add_option("--bandwidth", den.bandwidth, "bandwidth b")->required();
  density->add_option("--grid", den.grid, "series CSV of evaluation points (instead of a contour)");
  density->add_option("--out", den.out, "output CSV (default: stdout)");
  add_density_options(density);

  StudyArgs st;
  auto* study = app.add_subcommand("study", "Monte Carlo comparison of the four estimators");
  study->add_option("--config", st.config, "key = value study configuration")->required();
  study->add_option("--out-dir", st.out_dir, "output directory")->required();
  study->add_option("--replications", st.replications, "override the configured replication count")
    ->check(CLI::PositiveNumber);
  study->add_option("--seed", st.seed, "override the configured seed");

  RcovArgs rc;
  auto* rcov = app.add_subcommand("rcov", "daily realized covariances from intraday prices");
  rcov->add_option("--prices", rc.prices, "price CSV: timestamp column then one column per asset")->required();
  rcov->add_option("--out-dir", rc.out_dir, "output directory")->required();
  rcov->add_option("--missing", rc.missing, "ffill or drop");
  rcov->add_option("--interval", rc.interval, "sampling interval in seconds (default: inferred)")
    ->check(CLI::NonNegativeNumber);
  rcov->add_option("--rc-normalize", rc.normalize, "none (sum of outer products) or count");
  rcov->add_flag("--bandwidth", rc.bandwidth, "select a bandwidth for the daily series");
  rcov->add_flag("--density", rc.density, "write a density contour (selects b unless --bw is given)");
  rcov->add_option("--bw", den.bandwidth, "bandwidth for --density");
  add_bw_options(rcov);
  add_density_options(rcov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate)
      return cmd_simulate(sim);
    if (*bandwidth) {
      run_bandwidth(read_series(bw.input), bw, threads);
      return 0;
    }
    if (*density) {
      run_density(read_series(den.input), den, threads);
      return 0;
    }
    if (*study)
      return cmd_study(st, threads);
    if (*rcov) {
      den.kernel = bw.kernel;
      return cmd_rcov(rc, bw, den, threads);
    }
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
