#pragma once

#include "estimators.hpp"
#include "wishart.hpp"

#include <Eigen/Eigenvalues>

#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace wkde {

//! WAR(1): X_t = sum_k z_{k,t} z_{k,t}^T with z_{k,t} = M z_{k,t-1} + eps, eps ~ N(0, Sigma).
struct WarModel
{
  Matrix m;
  SpdMatrix sigma;
  int kappa = 0;
};

inline double spectral_radius(const Matrix& m)
{
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

//! Solves Sigma_inf = M Sigma_inf M^T + Sigma as an r(d) x r(d) system in vecp coordinates.
inline SpdMatrix lyapunov_stationary(const Matrix& m, const SpdMatrix& sigma)
{
  const int d = sigma.dim();
  if (m.rows() != d || m.cols() != d)
    throw dimension_error("lyapunov_stationary: M and Sigma differ in dimension");
  if (!(spectral_radius(m) < 1.0))
    throw domain_error("lyapunov_stationary: spectral radius of M is >= 1, no stationary solution");
  const int r = half_dim(d);
  Matrix a(r, r);
  for (int l = 0; l < r; ++l) {
    HalfVec e = HalfVec::Zero(r);
    e(l) = 1.0;
    const Matrix el = vecp_inv(e).matrix();
    a.col(l) = vecp(SymMatrix(Matrix(m * el * m.transpose())));
  }
  const HalfVec x = (Matrix::Identity(r, r) - a).partialPivLu().solve(vecp(sigma));
  return SpdMatrix(vecp_inv(x));
}

inline double lyapunov_residual(const Matrix& m, const SpdMatrix& sigma, const SpdMatrix& sinf)
{
  return (sinf.matrix() - m * sinf.matrix() * m.transpose() - sigma.matrix()).norm() /
         sinf.matrix().norm();
}

//! Raw WAR(1) path; matrices may be singular when kappa < d.
template<class Rng>
std::vector<SymMatrix> war1_simulate_raw(const WarModel& model, int n, int burnin, Rng& rng)
{
  const int d = model.sigma.dim();
  if (n < 1)
    throw std::invalid_argument("war1_simulate: n must be >= 1");
  if (burnin < 0)
    throw std::invalid_argument("war1_simulate: burnin must be >= 0");
  if (model.kappa < 1)
    throw std::invalid_argument("war1_simulate: kappa must be >= 1");
  if (model.kappa < d)
    std::cerr << "warning: kappa < d, simulated matrices are singular\n";
  const Matrix root_inf = lyapunov_stationary(model.m, model.sigma).sqrt();
  const Matrix root = model.sigma.sqrt();
  std::normal_distribution<double> z(0.0, 1.0);
  auto gauss = [&](const Matrix& l) {
    Vector u(d);
    for (int i = 0; i < d; ++i)
      u(i) = z(rng);
    return Vector(l * u);
  };
  std::vector<Vector> chains(model.kappa);
  for (auto& c : chains)
    c = gauss(root_inf);
  std::vector<SymMatrix> out;
  out.reserve(n);
  for (int t = 0; t < burnin + n; ++t) {
    Matrix x = Matrix::Zero(d, d);
    for (auto& c : chains) {
      c = model.m * c + gauss(root);
      x.noalias() += c * c.transpose();
    }
    if (t >= burnin)
      out.emplace_back(x);
  }
  return out;
}

template<class Rng>
SpdSeries war1_simulate(const WarModel& model, int n, int burnin, Rng& rng)
{
  auto raw = war1_simulate_raw(model, n, burnin, rng);
  std::vector<SpdMatrix> obs;
  obs.reserve(raw.size());
  for (const auto& x : raw)
    obs.emplace_back(x);
  return SpdSeries(std::move(obs));
}

//! Stationary marginal: S -> ln K_{kappa, Sigma_inf}(S).
inline std::function<double(const SpdMatrix&)> stationary_density(const WarModel& model)
{
  const int d = model.sigma.dim();
  if (!(model.kappa > d - 1))
    throw domain_error("stationary_density: kappa must exceed d - 1");
  WishartParams p{ static_cast<double>(model.kappa), lyapunov_stationary(model.m, model.sigma) };
  return [p](const SpdMatrix& s) { return wishart_logpdf(p, s); };
}

struct PresetModel
{
  std::string id; //!< "M1S1" ... "M3S3"
  WarModel model;
};

//! The nine benchmark configurations (M_i, Sigma_j), kappa = 4.
inline std::vector<PresetModel> preset_models()
{
  const Matrix m1 = (Matrix(2, 2) << 0.9, 0.0, 1.0, 0.0).finished();
  const Matrix m2 = (Matrix(2, 2) << 0.3, -0.3, -0.3, 0.3).finished();
  const Matrix m3 = 0.5 * Matrix::Identity(2, 2);
  const SpdMatrix s1{ { 1.0, 0.0 }, { 0.0, 1.0 } };
  const SpdMatrix s2{ { 1.0, 0.5 }, { 0.5, 1.0 } };
  const SpdMatrix s3{ { 1.0, 0.9 }, { 0.9, 1.0 } };
  const Matrix ms[] = { m1, m2, m3 };
  const SpdMatrix ss[] = { s1, s2, s3 };
  std::vector<PresetModel> out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out.push_back({ "M" + std::to_string(i + 1) + "S" + std::to_string(j + 1),
                      { ms[i], ss[j], 4 } });
  return out;
}

inline WarModel preset_model(const std::string& id)
{
  for (auto& p : preset_models())
    if (p.id == id)
      return p.model;
  throw std::invalid_argument("unknown preset model '" + id + "' (expected M1S1 ... M3S3)");
}

} // namespace wkde
