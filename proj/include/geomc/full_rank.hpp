#pragma once

#include "geomc/metropolis.hpp"

namespace geomc {

/// Buffers for evaluating the marginal likelihood of y given theta with beta
/// and the spatial effects integrated out. Shapes are fixed by (n, p).
///
/// Informative beta prior: Sigma = X Sigma_beta X' + sigma^2 R(phi) + tau^2 I,
///   L = chol(Sigma), u = L^{-1}(y - X mu_beta),
///   result = -sum log l_ii - u'u / 2.
/// Flat beta prior: Sigma = sigma^2 R(phi) + tau^2 I,
///   [v : U] = L^{-1}[y : X], W = chol(U'U), b = U'v, bt = W^{-1} b,
///   result = -sum log w_ii - sum log l_ii - (v'v - bt'bt) / 2.
/// The -n/2 log(2 pi) constant (and for the flat case the matching
/// p/2 log(2 pi)) is omitted throughout.
class MarginalLikelihoodWorkspace {
 public:
  MarginalLikelihoodWorkspace(const SpatialDataset& data, const CovFamily& family, const BetaPrior& beta_prior);

  double log_likelihood(const ProcessParams& theta);

  const SpatialDataset& data() const { return *data_; }

 private:
  void build_sigma(const ProcessParams& theta);

  const SpatialDataset* data_;
  CovFamily family_;
  bool flat_;
  Matrix distances_;
  Matrix xsx_;     // X Sigma_beta X', informative prior only
  Vector resid0_;  // y - X mu_beta
  Matrix sigma_;
  CholFactor<double> l_;
  Matrix vu_;  // [v : U] or u
  CholFactor<double> w_;
};

/// log p(theta) - 1/2 log|Sigma_{y|theta}| - 1/2 Q(theta), normal beta prior.
double log_target_informative(const ProcessParams& theta, const SpatialDataset& data, const CovFamily& family,
                              const ThetaSpec& spec, const BetaPrior& beta_prior);

/// log p(theta) - 1/2 log|X' Sigma^{-1} X| - 1/2 log|Sigma| - 1/2 Q(theta), flat beta prior.
double log_target_flat(const ProcessParams& theta, const SpatialDataset& data, const CovFamily& family,
                       const ThetaSpec& spec);

/// Marginalized Metropolis sampler for theta. Deterministic given options.seed.
ThetaChain fit_full_rank(const SpatialDataset& data, const CovFamily& family, const ThetaSpec& spec,
                         const BetaPrior& beta_prior, const SamplerOptions& options,
                         const ProgressReporter* progress = nullptr);

/// Prints the model-description banner shared by the spatial fitters.
void print_model_banner(const ProgressReporter& progress, const SpatialDataset& data, const CovFamily& family,
                        const ThetaSpec& spec, const BetaPrior& beta_prior, const SamplerOptions& options,
                        const std::string& low_rank_line = {});

}  // namespace geomc
