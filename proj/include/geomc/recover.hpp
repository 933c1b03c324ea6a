#pragma once

// Composition sampling: given stored theta draws, sample beta and the spatial
// effects from their conditional posteriors one retained draw at a time.

#include "geomc/conditional.hpp"
#include "geomc/lowrank.hpp"

namespace geomc {

/// Zero-based chain rows start-1, start-1+thin, ... < m for a 1-based start.
std::vector<Index> retained_rows(Index m, Index start, Index thin);

/// Number of rows retained_rows() returns, ceil((m - start + 1) / thin).
Index retained_count(Index m, Index start, Index thin);

/// beta | theta, y with the spatial effects integrated out:
/// [v : U] = L^{-1}[y : X], L = chol(sigma^2 R + tau^2 I),
/// b = Sigma_beta^{-1} mu_beta + U'v, L_B = chol(Sigma_beta^{-1} + U'U).
/// A flat prior contributes nothing to b or L_B.
class BetaConditionalWorkspace {
 public:
  BetaConditionalWorkspace(const SpatialDataset& data, const CovFamily& family, const BetaPrior& beta_prior);
  PrecisionForm conditional(const ProcessParams& theta);

 private:
  const SpatialDataset* data_;
  CovFamily family_;
  Matrix distances_;
  Matrix prior_precision_;
  Vector prior_precision_mean_;
};

/// alpha ~ N(B b, B) with B = (K^{-1} + G^{-1})^{-1}, computed as
/// G - G(K + G)^{-1}G: L = chol(K + G), W = L^{-1}G, L_B = chol(G - W'W).
/// A failing chol(G - W'W) is retried once on the symmetrized matrix.
CovarianceForm henderson_conditional(const Matrix& k, const Matrix& g, const Vector& b);

/// The Henderson covariance G - G(K + G)^{-1}G on its own.
Matrix henderson_covariance(const Matrix& k, const Matrix& g);

/// Which linear predictor the full-rank w recovery conditions on.
enum class WConditioning {
  PriorMean,  ///< residual y - X mu_beta with beta integrated out
  DrawnBeta,  ///< residual y - X beta^(k), conditioning on the recovered beta
};

/// w | theta, y for the full-rank model (Z = I, K = sigma^2 R). PriorMean:
/// G = X Sigma_beta X' + tau^2 I and residual y - X mu_beta; DrawnBeta:
/// G = tau^2 I and residual y - X beta. Since Z = I, G is Sigma_{y|alpha}
/// itself and b = G^{-1} r comes from one Cholesky solve.
CovarianceForm w_conditional_full(const Matrix& distances, const SpatialDataset& data, const CovFamily& family,
                                  const BetaPrior& beta_prior, const ProcessParams& theta, WConditioning mode,
                                  const Vector* beta = nullptr);

/// alpha | beta, theta, y for a predictive-process model. Alternative
/// parametrization: precision C* + W'W with W = D^{-1/2}C', b = W'D^{-1/2}r.
/// Standard parametrization: Henderson with K = C*, G = (Z'D^{-1}Z)^{-1}.
/// Returns a draw of alpha.
Vector draw_alpha_lowrank(const PPStructure& pp, const Vector& resid, const Vector& z);

struct RecoverOptions {
  Index start = 1;
  Index thin = 1;
  bool recover_w = true;
  WConditioning w_conditioning = WConditioning::PriorMean;
  std::uint64_t seed = 1;
};

struct RecoveredSamples {
  std::vector<Index> rows;  // chain rows used, zero-based
  std::vector<std::string> theta_names;
  Matrix theta_subset;      // M' x dim(theta)
  Matrix beta;              // M' x p
  Matrix w;                 // M' x n: w (full rank) or projected effects (low rank)
  Matrix alpha;             // M' x r, low rank only
  Matrix w_star;            // M' x r knot-level effects, low rank only

  Index size() const { return static_cast<Index>(rows.size()); }
  ProcessParams params(Index k) const { return params_from_row(theta_names, theta_subset, k); }
};

/// Full-rank recovery of beta and (optionally) w. Draw k uses substream k of
/// options.seed: p normals for beta, then n for w. With a flat beta prior w
/// always conditions on the drawn beta.
RecoveredSamples recover_full_rank(const ThetaChain& chain, const SpatialDataset& data, const CovFamily& family,
                                   const BetaPrior& beta_prior, const RecoverOptions& options,
                                   const ProgressReporter* progress = nullptr);

/// beta draws only.
Matrix recover_beta(const ThetaChain& chain, const SpatialDataset& data, const CovFamily& family,
                    const BetaPrior& beta_prior, Index start, Index thin, std::uint64_t seed = 1);

/// Low-rank recovery of alpha, knot effects C* alpha (alternative
/// parametrization; alpha itself otherwise) and projected effects Z alpha,
/// conditioning on the Gibbs beta draws.
RecoveredSamples recover_lowrank(const LowRankFit& fit, const SpatialDataset& data, const CovFamily& family,
                                 const RecoverOptions& options, const ProgressReporter* progress = nullptr);

}  // namespace geomc
