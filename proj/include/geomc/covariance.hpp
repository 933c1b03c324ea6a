#pragma once

#include <optional>
#include <string>

#include "geomc/linalg.hpp"

namespace geomc {

/// n locations in the plane, one per row.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 2>;

enum class CovKind { Exponential, PoweredExponential, Gaussian, Spherical, Matern };

struct CovFamily {
  CovKind kind = CovKind::Exponential;
  /// Exponent of the powered-exponential family, in (0, 2].
  double power = 1.0;

  static CovFamily from_name(const std::string& name, double power = 1.0);
  std::string name() const;
  bool has_nu() const { return kind == CovKind::Matern; }
};

/// theta = {sigma^2, phi, nu, tau^2}. nu is present iff the family is Matern.
struct ProcessParams {
  double sigma_sq = 1.0;
  double phi = 1.0;
  std::optional<double> nu;
  double tau_sq = 0.0;
};

/// Modified Bessel function of the second kind K_nu(x), nu >= 0, x > 0.
double bessel_k(double nu, double x);

/// Validated correlation function rho(d) for one (family, phi, nu); the
/// Matern normalizer is computed once per construction.
class Correlation {
 public:
  Correlation(const CovFamily& family, double phi, std::optional<double> nu = std::nullopt);
  double operator()(double d) const;
  /// out = rho(d) elementwise; vectorized for the closed-form families.
  void fill(const Eigen::Ref<const Vector>& d, Eigen::Ref<Vector> out) const;

 private:
  CovFamily family_;
  double phi_;
  double nu_ = 0.0;
  double log_norm_ = 0.0;  // log(2^{nu-1} Gamma(nu))
};

double correlation(double d, const CovFamily& family, double phi, std::optional<double> nu = std::nullopt);

/// Decay for the exponential family such that rho(range) = 0.05.
double effective_range_to_phi(double range);

Matrix pairwise_distances(const Coords& a, const Coords& b);

/// sigma^2 rho(D) elementwise, plus tau^2 on the diagonal when requested
/// (`d` must then be square).
Matrix cov_from_distances(const Matrix& d, const CovFamily& family, const ProcessParams& params,
                          bool include_nugget);

Matrix cov_matrix(const Coords& coords, const CovFamily& family, const ProcessParams& params,
                  bool include_nugget);

Matrix cross_cov(const Coords& a, const Coords& b, const CovFamily& family, const ProcessParams& params);

void validate_params(const CovFamily& family, const ProcessParams& params);

}  // namespace geomc
