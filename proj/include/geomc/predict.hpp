#pragma once

// Posterior predictive sampling at new locations from retained (beta, theta)
// draws, by joint-normal conditioning or, for low-rank fits, through alpha.

#include "geomc/recover.hpp"

namespace geomc {

enum class PredictMode { Conditional, ViaAlpha };

struct PredictionRequest {
  Coords coords;  // t new locations
  Matrix x;       // t x p design at the new locations
  PredictMode mode = PredictMode::Conditional;
  /// Draw the t locations jointly (t x t Cholesky per sample) instead of
  /// one location at a time.
  bool joint = false;
  /// Predict the latent surface: the nugget is left out of C22 / D0.
  bool latent = false;
  std::uint64_t seed = 1;

  Index t() const { return coords.rows(); }
  void validate(Index p) const;
};

/// Mean and covariance of y0 | y, beta, theta. `var` always holds the
/// marginal variances; `cov` is filled only when the full matrix is asked for.
struct PredictiveMoments {
  Vector mean;
  Vector var;
  Matrix cov;
};

/// Full rank: [u : V] = L^{-1}[y - X beta : C12] with L = chol(C11),
/// mean = X0 beta + V'u, cov = C22 - V'V.
PredictiveMoments conditional_moments_full(const SpatialDataset& data, const CovFamily& family,
                                           const ProcessParams& theta, const Vector& beta, const Coords& coords0,
                                           const Matrix& x0, bool latent, bool full_cov = true);

/// Predictive moments under a predictive-process fit, for one (beta, theta).
/// C11 = D + Z K Z' is never formed: with A = L*^{-1}C (r x n),
/// M = A D^{-1/2}, P = M M' and Q = H M' (both r x r), for new locations
/// with A0 = L*^{-1}C0,
///   C12' C11^{-1} C12 = A0'(P - Q'Q)A0,
///   C12' C11^{-1} r   = A0'(M vt - Q' H vt),  vt = D^{-1/2} r.
class LowRankPredictor {
 public:
  LowRankPredictor(const PPGeometry& geometry, const CovFamily& family, const ProcessParams& theta,
                   const Vector& resid, bool modified, PPParametrization parametrization);

  PredictiveMoments moments(const Coords& coords0, const Matrix& x0, const Vector& beta, bool latent,
                            bool full_cov = true) const;

  const PPStructure& pp() const { return pp_; }

 private:
  const PPGeometry* geometry_;
  CovFamily family_;
  ProcessParams theta_;
  bool modified_;
  PPStructure pp_;
  Matrix core_;  // P - Q'Q
  Vector mean_core_;
};

/// Z0 = C0 (alternative) or C0 C*^{-1} (standard), and the diagonal of D0.
struct NewLocationStructure {
  Matrix z0;
  Vector d0;
};

NewLocationStructure new_location_structure(const PPStructure& pp, const Coords& knots, const Coords& coords0,
                                            const CovFamily& family, const ProcessParams& theta, bool modified,
                                            bool latent);

/// t x M' predictive draws for a full-rank fit from recovered (beta, theta).
Matrix predict_full_rank(const RecoveredSamples& rec, const SpatialDataset& data, const CovFamily& family,
                         const PredictionRequest& request, const ProgressReporter* progress = nullptr);

/// t x M' predictive draws for a low-rank fit. Conditional mode needs the
/// beta and theta columns of `rec`; via-alpha mode also needs rec.alpha.
Matrix predict_lowrank(const RecoveredSamples& rec, const SpatialDataset& data, const CovFamily& family,
                       const Coords& knots, bool modified, PPParametrization parametrization,
                       const PredictionRequest& request, const ProgressReporter* progress = nullptr);

}  // namespace geomc
