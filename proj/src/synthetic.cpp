#include "geomc/synthetic.hpp"

#include <cmath>

namespace geomc {

Coords uniform_coords(Index n, double extent, RandomStream& rng) {
  Coords c(n, 2);
  for (Index i = 0; i < n; ++i) {
    c(i, 0) = extent * rng.uniform();
    c(i, 1) = extent * rng.uniform();
  }
  return c;
}

namespace {

Matrix design_with_intercept(Index n, Index p, RandomStream& rng) {
  Matrix x(n, p);
  x.col(0).setOnes();
  for (Index j = 1; j < p; ++j)
    for (Index i = 0; i < n; ++i) x(i, j) = rng.normal();
  return x;
}

}  // namespace

SyntheticSpatial simulate_spatial(Index n, const Vector& beta, const CovFamily& family, const ProcessParams& theta,
                                  RandomStream& rng) {
  require(n >= 2 && beta.size() >= 1, ErrorKind::InvalidParam, "need n >= 2 and p >= 1");
  SyntheticSpatial s;
  s.coords = uniform_coords(n, 1.0, rng);
  s.x = design_with_intercept(n, beta.size(), rng);
  const auto l = chol(cov_matrix(s.coords, family, theta, false), 1e-10 * theta.sigma_sq, "simulation covariance");
  s.w = mvn_draw(Vector::Zero(n), l, rng);
  s.y = s.x * beta + s.w;
  const double sd = std::sqrt(theta.tau_sq);
  for (Index i = 0; i < n; ++i) s.y[i] += sd * rng.normal();
  return s;
}

SyntheticDynamic simulate_dynamic(Index n, Index steps, const Vector& beta0, const Matrix& sigma_eta,
                                  const CovFamily& family, const ProcessParams& theta, double extent,
                                  RandomStream& rng) {
  const Index p = beta0.size();
  SyntheticDynamic s;
  s.coords = uniform_coords(n, extent, rng);
  s.beta.resize(p, steps);
  s.u.resize(n, steps);
  s.y.resize(n, steps);
  const auto l_eta = chol(sigma_eta, 0.0, "Sigma_eta");
  const auto l_w = chol(cov_matrix(s.coords, family, theta, false), 1e-10 * theta.sigma_sq, "simulation covariance");
  Vector beta = beta0;
  Vector u = Vector::Zero(n);
  const double sd = std::sqrt(theta.tau_sq);
  for (Index t = 0; t < steps; ++t) {
    beta = mvn_draw(beta, l_eta, rng);
    u = mvn_draw(u, l_w, rng);
    Matrix x = design_with_intercept(n, p, rng);
    s.beta.col(t) = beta;
    s.u.col(t) = u;
    for (Index i = 0; i < n; ++i) s.y(i, t) = x.row(i).dot(beta) + u[i] + sd * rng.normal();
    s.x.push_back(std::move(x));
  }
  return s;
}

}  // namespace geomc
