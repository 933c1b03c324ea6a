// K_nu(x) by Temme's method: reduce the order to mu in [-1/2, 1/2), get
// K_mu and K_{mu+1} from a power series (x < 2) or Steed's continued
// fraction (x >= 2), then recur upward in the order.

#include <cmath>
#include <numbers>
#include <string>

#include "geomc/covariance.hpp"

namespace geomc {
namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;
constexpr double kSeriesLimit = 2.0;

// Taylor coefficients of 1/Gamma(z) (Abramowitz & Stegun 6.1.34), a_1 .. a_8.
constexpr double kRecipGamma[] = {1.0,
                                  0.5772156649015329,
                                  -0.6558780715202538,
                                  -0.0420026350340952,
                                  0.1665386113822915,
                                  -0.0421977345555443,
                                  -0.0096219715278770,
                                  0.0072189432466630};

struct TemmeGammas {
  double gam1;   // (1/G(1-mu) - 1/G(1+mu)) / (2 mu)
  double gam2;   // (1/G(1-mu) + 1/G(1+mu)) / 2
  double gampl;  // 1/G(1+mu)
  double gammi;  // 1/G(1-mu)
};

TemmeGammas temme_gammas(double mu) {
  TemmeGammas g{};
  g.gampl = 1.0 / std::tgamma(1.0 + mu);
  g.gammi = 1.0 / std::tgamma(1.0 - mu);
  g.gam2 = 0.5 * (g.gammi + g.gampl);
  if (std::abs(mu) < 1e-3) {
    // The direct difference cancels; use the even part of the 1/Gamma series.
    const double m2 = mu * mu;
    g.gam1 = -(kRecipGamma[1] + m2 * (kRecipGamma[3] + m2 * (kRecipGamma[5] + m2 * kRecipGamma[7])));
  } else {
    g.gam1 = (g.gammi - g.gampl) / (2.0 * mu);
  }
  return g;
}

}  // namespace

double bessel_k(double nu, double x) {
  require(x > 0.0 && std::isfinite(x), ErrorKind::InvalidParam, "bessel_k needs x > 0");
  require(nu >= 0.0 && std::isfinite(nu), ErrorKind::InvalidParam, "bessel_k needs nu >= 0");

  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  double k_mu = 0.0;
  double k_mu1 = 0.0;

  if (x < kSeriesLimit) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const TemmeGammas g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= kMaxIter; ++i) {
      ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
      c *= d / i;
      p /= (i - mu);
      q /= (i + mu);
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    require(i <= kMaxIter, ErrorKind::InvalidParam, "bessel_k series did not converge");
    k_mu = sum;
    k_mu1 = sum1 * xi2;
  } else {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 1;
    for (; i <= kMaxIter; ++i) {
      a -= 2 * i;
      c = -a * c / (i + 1.0);
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < kEps) break;
    }
    require(i <= kMaxIter, ErrorKind::InvalidParam, "bessel_k continued fraction did not converge");
    h = a1 * h;
    k_mu = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
    k_mu1 = k_mu * (mu + x + 0.5 - h) * xi;
  }

  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * xi2 * k_mu1 + k_mu;
    k_mu = k_mu1;
    k_mu1 = next;
  }
  return k_mu;
}

}  // namespace geomc
