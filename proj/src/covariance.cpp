#include "geomc/covariance.hpp"

#include <cmath>

namespace geomc {

CovFamily CovFamily::from_name(const std::string& name, double power) {
  CovFamily f;
  f.power = power;
  if (name == "exponential")
    f.kind = CovKind::Exponential;
  else if (name == "powered-exponential" || name == "powered_exponential")
    f.kind = CovKind::PoweredExponential;
  else if (name == "gaussian")
    f.kind = CovKind::Gaussian;
  else if (name == "spherical")
    f.kind = CovKind::Spherical;
  else if (name == "matern")
    f.kind = CovKind::Matern;
  else
    fail(ErrorKind::InvalidParam, "unknown covariance family '" + name + "'");
  if (f.kind == CovKind::PoweredExponential)
    require(power > 0.0 && power <= 2.0, ErrorKind::InvalidParam,
            "powered-exponential exponent must lie in (0, 2]");
  return f;
}

std::string CovFamily::name() const {
  switch (kind) {
    case CovKind::Exponential: return "exponential";
    case CovKind::PoweredExponential: return "powered-exponential";
    case CovKind::Gaussian: return "gaussian";
    case CovKind::Spherical: return "spherical";
    case CovKind::Matern: return "matern";
  }
  return "unknown";
}

Correlation::Correlation(const CovFamily& family, double phi, std::optional<double> nu)
    : family_(family), phi_(phi) {
  require(phi > 0.0 && std::isfinite(phi), ErrorKind::InvalidParam, "phi must be > 0");
  if (family.kind == CovKind::PoweredExponential)
    require(family.power > 0.0 && family.power <= 2.0, ErrorKind::InvalidParam,
            "powered-exponential exponent must lie in (0, 2]");
  if (family.kind == CovKind::Matern) {
    require(nu.has_value() && *nu > 0.0 && std::isfinite(*nu), ErrorKind::InvalidParam,
            "matern needs nu > 0");
    nu_ = *nu;
    log_norm_ = (nu_ - 1.0) * std::log(2.0) + std::lgamma(nu_);
  }
}

double Correlation::operator()(double d) const {
  if (d <= 0.0) return 1.0;
  const double x = d * phi_;
  switch (family_.kind) {
    case CovKind::Exponential:
      return std::exp(-x);
    case CovKind::PoweredExponential:
      return std::exp(-std::pow(x, family_.power));
    case CovKind::Gaussian:
      return std::exp(-x * x);
    case CovKind::Spherical:
      return x >= 1.0 ? 0.0 : 1.0 - 1.5 * x + 0.5 * x * x * x;
    case CovKind::Matern: {
      const double k = bessel_k(nu_, x);
      if (k == 0.0) return 0.0;
      const double r = std::exp(nu_ * std::log(x) + std::log(k) - log_norm_);
      return std::isfinite(r) ? std::min(r, 1.0) : 1.0;
    }
  }
  return 0.0;
}

void Correlation::fill(const Eigen::Ref<const Vector>& d, Eigen::Ref<Vector> out) const {
  const auto x = d.array() * phi_;
  switch (family_.kind) {
    case CovKind::Exponential:
      out.array() = (-x).exp();
      return;
    case CovKind::Gaussian:
      out.array() = (-x.square()).exp();
      return;
    case CovKind::PoweredExponential:
      out.array() = (-x.pow(family_.power)).exp();
      return;
    case CovKind::Spherical:
      out.array() = (x >= 1.0).select(0.0, 1.0 - 1.5 * x + 0.5 * x.cube());
      return;
    case CovKind::Matern:
      for (Index i = 0; i < d.size(); ++i) out[i] = (*this)(d[i]);
      return;
  }
}

double correlation(double d, const CovFamily& family, double phi, std::optional<double> nu) {
  require(d >= 0.0, ErrorKind::InvalidParam, "distance must be >= 0");
  return Correlation(family, phi, nu)(d);
}

double effective_range_to_phi(double range) {
  require(range > 0.0, ErrorKind::InvalidParam, "effective range must be > 0");
  return -std::log(0.05) / range;
}

Matrix pairwise_distances(const Coords& a, const Coords& b) {
  Matrix d(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j)
    for (Index i = 0; i < a.rows(); ++i) d(i, j) = std::hypot(a(i, 0) - b(j, 0), a(i, 1) - b(j, 1));
  return d;
}

void validate_params(const CovFamily& family, const ProcessParams& params) {
  require(params.sigma_sq > 0.0, ErrorKind::InvalidParam, "sigma.sq must be > 0");
  require(params.tau_sq >= 0.0, ErrorKind::InvalidParam, "tau.sq must be >= 0");
  require(params.nu.has_value() == family.has_nu(), ErrorKind::InvalidParam,
          "nu must be given exactly when the family is matern");
  Correlation(family, params.phi, params.nu);
}

Matrix cov_from_distances(const Matrix& d, const CovFamily& family, const ProcessParams& params,
                          bool include_nugget) {
  validate_params(family, params);
  const Correlation rho(family, params.phi, params.nu);
  Matrix c(d.rows(), d.cols());
  for (Index j = 0; j < d.cols(); ++j) rho.fill(d.col(j), c.col(j));
  c *= params.sigma_sq;
  if (include_nugget) {
    require(d.rows() == d.cols(), ErrorKind::DimensionMismatch, "nugget needs a square covariance");
    c.diagonal().array() += params.tau_sq;
  }
  return c;
}

Matrix cov_matrix(const Coords& coords, const CovFamily& family, const ProcessParams& params,
                  bool include_nugget) {
  return cov_from_distances(pairwise_distances(coords, coords), family, params, include_nugget);
}

Matrix cross_cov(const Coords& a, const Coords& b, const CovFamily& family, const ProcessParams& params) {
  return cov_from_distances(pairwise_distances(a, b), family, params, false);
}

}  // namespace geomc
