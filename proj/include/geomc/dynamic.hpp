#pragma once

// Dynamic spatio-temporal linear model on a fixed station network:
//   y_t(s) = x_t(s)' beta_t + u_t(s) + eps_t(s),  eps_t ~ N(0, tau^2_t)
//   beta_t = beta_{t-1} + eta_t,                  eta_t ~ N(0, Sigma_eta)
//   u_t(s) = u_{t-1}(s) + w_t(s),                 w_t ~ GP(0, sigma^2_t rho(.; phi_t))
// with beta_0 ~ N(m_0, Sigma_0) and u_0 = 0.

#include <optional>
#include <utility>
#include <vector>

#include "geomc/conditional.hpp"
#include "geomc/model_spec.hpp"
#include "geomc/random.hpp"
#include "geomc/report.hpp"

namespace geomc {

struct DynamicDataset {
  Coords coords;
  Matrix y;                     // n x T; entries at missing cells are NaN
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing;  // n x T
  std::vector<Matrix> x;        // T matrices, each n x p

  Index n() const { return y.rows(); }
  Index steps() const { return y.cols(); }
  Index p() const { return x.empty() ? 0 : x.front().cols(); }
  Index missing_count() const { return missing.count(); }

  /// Validates shapes; NaN cells of y are the missing ones. Throws
  /// AllMissingStep if some time step has no observation.
  static DynamicDataset make(Coords coords, Matrix y, std::vector<Matrix> x);
};

struct InverseWishart {
  double df = 2.0;
  Matrix scale;  // p x p SPD; mean scale / (df - p - 1)
};

struct DynamicPriors {
  Vector m0;
  Matrix sigma0;
  InverseWishart sigma_eta;
  std::vector<ScalarPrior> sigma_sq;  // one per time step, inverse-gamma
  std::vector<ScalarPrior> tau_sq;    // one per time step, inverse-gamma
  std::vector<ScalarPrior> phi;       // one per time step, uniform

  void validate(Index p, Index steps) const;
};

struct DynamicStart {
  Vector beta;       // p, used for beta_0 and every beta_t
  Matrix sigma_eta;  // p x p
  Vector sigma_sq;   // T
  Vector tau_sq;     // T
  Vector phi;        // T
};

struct DynamicOptions {
  Index n_samples = 5000;
  Index report_interval = 500;
  std::uint64_t seed = 1;
  Vector phi_tuning_sd;  // T, proposal sd of logit(phi_t)
  /// nu for the Matern family, held fixed.
  std::optional<double> nu;
  bool keep_u = false;
  /// Add the intercept/level shift move after the u_t updates (needs an
  /// all-ones design column).
  bool shift_move = true;
};

struct DynamicState {
  Vector beta0;      // p
  Matrix beta;       // p x T
  Matrix u;          // n x T; u_0 = 0 is implicit
  Matrix sigma_eta;  // p x p
  Vector sigma_sq;   // T
  Vector tau_sq;     // T
  Vector phi;        // T
  Matrix y;          // n x T working copy with missing cells imputed
};

/// One draw of an inverse-Wishart(df, scale) matrix by the Bartlett
/// decomposition: with scale = U U' and A the Bartlett factor, the draw is
/// B B' where B' = A^{-1} U'.
Matrix draw_inverse_wishart(double df, const Matrix& scale, RandomStream& rng);

/// Posterior (df, scale) of Sigma_eta given the beta path.
InverseWishart sigma_eta_posterior(const DynamicState& state, const DynamicPriors& priors);

/// beta_t | rest for t = 1..T, and beta_0 | rest for t = 0.
PrecisionForm beta_conditional_dynamic(const DynamicDataset& data, const DynamicState& state,
                                       const DynamicPriors& priors, Index t);

/// u_t | rest for t = 1..T, given chol of each R_t = rho(phi_t) (index t-1).
PrecisionForm u_conditional_dynamic(const DynamicDataset& data, const DynamicState& state, Index t,
                                    const std::vector<CholFactor<double>>& r_chol);

/// IG posterior (shape, scale) of sigma^2_t and of tau^2_t, t = 1..T.
std::pair<double, double> sigma_sq_posterior(const DynamicState& state, const DynamicPriors& priors, Index t,
                                             const CholFactor<double>& r_chol);
std::pair<double, double> tau_sq_posterior(const DynamicDataset& data, const DynamicState& state,
                                           const DynamicPriors& priors, Index t);

/// First design column equal to one at every station and step, if any.
std::optional<Index> intercept_column(const DynamicDataset& data);

/// The likelihood is unchanged when the intercept path moves up by delta_t
/// and every u_t moves down by delta_t (t = 1..T); delta_0 moves beta_0
/// alone. This is the Gaussian law of delta = (delta_0, ..., delta_T) under
/// the priors on beta and u, given the rest of the state.
PrecisionForm level_shift_conditional(const DynamicState& state, const DynamicPriors& priors, Index column,
                                      const std::vector<CholFactor<double>>& r_chol);

/// Applies a level shift drawn from level_shift_conditional.
void apply_level_shift(DynamicState& state, Index column, const Vector& delta);

/// Redraws every originally missing cell from N(x' beta_t + u_t(s), tau^2_t).
void impute_missing(const DynamicDataset& data, DynamicState& state, RandomStream& rng);

struct DynamicSamples {
  Index steps = 0;
  Index p = 0;
  Matrix beta0;      // M x p
  Matrix beta;       // M x (p T), column (t-1) p + j
  Matrix theta;      // M x 3T: sigma.sq, tau.sq, phi blocks of T columns
  Matrix sigma_eta;  // M x p^2, column-major
  Matrix y_missing;  // M x (#missing), posterior predictive draws
  std::vector<std::pair<Index, Index>> missing_cells;  // (station, step), zero-based
  Matrix u;                                            // M x (n T) when kept
  std::vector<double> interval_rates;                  // mean phi acceptance per report interval
  Vector phi_acceptance;                               // per step, whole run

  double mean_acceptance() const { return phi_acceptance.size() ? phi_acceptance.mean() : 0.0; }
};

DynamicSamples fit_dynamic(const DynamicDataset& data, const CovFamily& family, const DynamicPriors& priors,
                           const DynamicStart& start, const DynamicOptions& options,
                           const ProgressReporter* progress = nullptr);

}  // namespace geomc
