#pragma once

// Predictive-process (low-rank) models. With knots S* and cross-covariance
// C(theta)' (n x r), the marginal covariance of y given beta is
// Sigma = Z K Z' + D, with either
//   Standard:    K = C*,      Z = C(theta)' C*^{-1}
//   Alternative: K = C*^{-1}, Z = C(theta)'
// Both give the same Sigma. D = tau^2 I, plus for the modified predictive
// process the pointwise variance lost by the projection.

#include "geomc/conditional.hpp"
#include "geomc/metropolis.hpp"

namespace geomc {

enum class PPParametrization { Standard, Alternative };

/// Theta-independent distances for one (data, knots) pair.
struct PPGeometry {
  Coords coords;
  Coords knots;
  Matrix knot_dist;   // r x r
  Matrix cross_dist;  // n x r

  static PPGeometry make(const Coords& coords, const Coords& knots);
  Index n() const { return coords.rows(); }
  Index r() const { return knots.rows(); }
};

struct PPStructure {
  PPParametrization parametrization = PPParametrization::Alternative;
  Matrix c_star;                   // C*(theta), r x r
  CholFactor<double> c_star_chol;  // chol(C*)
  Matrix cross;                    // C(theta)', n x r
  Matrix z;                        // Z(theta), n x r
  Matrix k_inverse;                // K^{-1}: C* (alternative) or C*^{-1} by solves (standard)
  Matrix k;                        // K: C* (standard); left empty for the alternative
  Vector d_diag;                   // diagonal of D(theta)

  Index n() const { return z.rows(); }
  Index r() const { return z.cols(); }
};

/// Builds C*, C', Z, K and D for theta. Modified: d_i = C(s_i, s_i) -
/// c_i' C*^{-1} c_i + tau^2, with the quadratic form from triangular solves.
/// Throws if an adjustment is materially negative.
PPStructure build_pp_structure(const PPGeometry& geometry, const CovFamily& family, const ProcessParams& params,
                               bool modified, PPParametrization parametrization = PPParametrization::Alternative);

PPStructure build_pp_structure(const Coords& coords, const Coords& knots, const CovFamily& family,
                               const ProcessParams& params, bool modified,
                               PPParametrization parametrization = PPParametrization::Alternative);

/// Pointwise variance lost by the projection at `coords`, sigma^2 - c' C*^{-1} c.
Vector pp_adjustment(const Matrix& cross, const CholFactor<double>& c_star_chol, double sigma_sq);

/// Factors behind Sherman-Woodbury-Morrison for Sigma = D + Z K Z':
/// W = D^{-1/2} Z, L = chol(K^{-1} + W'W), H = L^{-1} W', and
/// Sigma^{-1} = D^{-1/2}(I - H'H)D^{-1/2}. H is applied through W and L
/// and never stored. T = chol(I - H H') is assembled as chol(L^{-1} K^{-1}
/// L'^{-1}), the same matrix without the cancellation of I - HH'.
class SwmFactor {
 public:
  explicit SwmFactor(const PPStructure& pp);

  const Vector& d_inv_sqrt() const { return d_inv_sqrt_; }
  const CholFactor<double>& l() const { return l_; }
  const CholFactor<double>& t() const { return t_; }

  /// H x for x with n rows.
  Matrix h_times(const Matrix& x) const;
  /// H' y for y with r rows.
  Matrix ht_times(const Matrix& y) const;
  /// Materialized H (r x n); tests and diagnostics only.
  Matrix h() const;

  /// Sigma^{-1} rhs in O(n r) per column.
  Matrix apply_inverse(const Matrix& rhs) const;

  /// log|Sigma| = sum log d_ii - 2 sum log t_ii.
  double log_det() const { return log_det_d_ - 2.0 * half_log_det(t_); }

 private:
  Vector d_inv_sqrt_;
  Matrix w_;  // D^{-1/2} Z
  CholFactor<double> l_;
  CholFactor<double> t_;
  double log_det_d_ = 0.0;
};

/// Sigma^{-1} rhs for the low-rank covariance of `pp`.
Matrix swm_apply(const PPStructure& pp, const Matrix& rhs);

/// -1/2 log|Sigma| - 1/2 r' Sigma^{-1} r evaluated as
/// -1/2 sum log d_ii + sum log t_ii - 1/2 (v'v - w'w), v = D^{-1/2} r, w = H v.
double lowrank_log_likelihood(const SwmFactor& swm, const Vector& resid);

/// log p(theta) plus the above for resid = y - X beta.
double lowrank_log_target(const ProcessParams& theta, const PPStructure& pp, const SpatialDataset& data,
                          const Vector& beta, const ThetaSpec& spec);

/// Full conditional of beta given theta:
/// [v : V] = D^{-1/2}[y : X], Vt = H V,
/// b = Sigma_beta^{-1} mu_beta + V'v - Vt' H v,
/// L_B = chol(Sigma_beta^{-1} + V'V - Vt'Vt).
PrecisionForm beta_conditional_lowrank(const SwmFactor& swm, const SpatialDataset& data,
                                       const Matrix& prior_precision, const Vector& prior_precision_mean);

struct LowRankFit {
  ThetaChain theta;
  Matrix beta;  // aligned row-for-row with theta.samples
  Coords knots;
  bool modified = true;
  PPParametrization parametrization = PPParametrization::Alternative;
};

/// Gibbs sampler alternating beta | theta and a Metropolis step on theta | beta.
class LowRankGibbs {
 public:
  LowRankGibbs(const SpatialDataset& data, const CovFamily& family, const Coords& knots, bool modified,
               const ThetaSpec& spec, const BetaPrior& beta_prior, const SamplerOptions& options,
               PPParametrization parametrization = PPParametrization::Alternative);

  /// Draws beta from its full conditional at the current theta.
  const Vector& update_beta(RandomStream& rng);
  /// One Metropolis scan on theta given the current beta; true if any
  /// proposal was accepted.
  bool update_theta(RandomStream& rng);

  const Vector& beta() const { return beta_; }
  const ProcessParams& theta() const { return kernel_.params(); }
  const MetropolisKernel& kernel() const { return kernel_; }
  MetropolisKernel& kernel() { return kernel_; }
  const PPStructure& pp() const { return pp_; }
  const SwmFactor& swm() const { return *swm_; }

 private:
  const SpatialDataset& data_;
  CovFamily family_;
  PPGeometry geometry_;
  bool modified_;
  PPParametrization parametrization_;
  ThetaSpec spec_;
  Matrix prior_precision_;
  Vector prior_precision_mean_;
  MetropolisKernel kernel_;
  Vector beta_;
  PPStructure pp_;
  std::optional<SwmFactor> swm_;
  PPStructure candidate_pp_;
  std::optional<SwmFactor> candidate_swm_;
};

LowRankFit fit_lowrank(const SpatialDataset& data, const CovFamily& family, const KnotSpec& knots,
                       const ThetaSpec& spec, const BetaPrior& beta_prior, const SamplerOptions& options,
                       const ProgressReporter* progress = nullptr,
                       PPParametrization parametrization = PPParametrization::Alternative);

}  // namespace geomc
