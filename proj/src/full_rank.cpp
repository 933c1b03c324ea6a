#include "geomc/full_rank.hpp"

#include <sstream>

namespace geomc {

MarginalLikelihoodWorkspace::MarginalLikelihoodWorkspace(const SpatialDataset& data, const CovFamily& family,
                                                         const BetaPrior& beta_prior)
    : data_(&data),
      family_(family),
      flat_(beta_prior.is_flat()),
      distances_(pairwise_distances(data.coords, data.coords)),
      sigma_(data.n(), data.n()) {
  if (flat_) {
    vu_.resize(data.n(), 1 + data.p());
  } else {
    require(beta_prior.mu.size() == data.p(), ErrorKind::DimensionMismatch, "beta prior dimension != p");
    xsx_ = data.x * beta_prior.sigma * data.x.transpose();
    resid0_ = data.y - data.x * beta_prior.mu;
    vu_.resize(data.n(), 1);
  }
}

void MarginalLikelihoodWorkspace::build_sigma(const ProcessParams& theta) {
  validate_params(family_, theta);
  const Correlation rho(family_, theta.phi, theta.nu);
  const Index n = data_->n();
  // Fill the lower triangle with vectorized kernels, then mirror it.
  for (Index j = 0; j < n; ++j) {
    auto col = sigma_.col(j).tail(n - j);
    rho.fill(distances_.col(j).tail(n - j), col);
    col *= theta.sigma_sq;
    sigma_(j, j) += theta.tau_sq;
  }
  symmetrize_from_lower(sigma_);
  if (!flat_) sigma_ += xsx_;
}

double MarginalLikelihoodWorkspace::log_likelihood(const ProcessParams& theta) {
  build_sigma(theta);
  chol_into(l_, sigma_);
  if (!flat_) {
    vu_.col(0) = resid0_;
    trsolve_in_place(l_, vu_, Side::Lower);
    return -half_log_det(l_) - 0.5 * vu_.col(0).squaredNorm();
  }
  const Index p = data_->p();
  vu_.col(0) = data_->y;
  vu_.rightCols(p) = data_->x;
  trsolve_in_place(l_, vu_, Side::Lower);
  const auto v = vu_.col(0);
  const auto u = vu_.rightCols(p);
  const Matrix utu = u.transpose() * u;
  try {
    chol_into(w_, utu);
  } catch (const NotPositiveDefiniteError&) {
    fail(ErrorKind::RankDeficientX, "chol(U'U) failed; X is numerically rank deficient");
  }
  Vector b_tilde = u.transpose() * v;
  trsolve_in_place(w_, b_tilde, Side::Lower);
  return -half_log_det(w_) - half_log_det(l_) - 0.5 * (v.squaredNorm() - b_tilde.squaredNorm());
}

double log_target_informative(const ProcessParams& theta, const SpatialDataset& data, const CovFamily& family,
                              const ThetaSpec& spec, const BetaPrior& beta_prior) {
  require(!beta_prior.is_flat(), ErrorKind::InvalidParam, "log_target_informative needs a normal beta prior");
  MarginalLikelihoodWorkspace ws(data, family, beta_prior);
  return log_prior(theta, spec) + ws.log_likelihood(theta);
}

double log_target_flat(const ProcessParams& theta, const SpatialDataset& data, const CovFamily& family,
                       const ThetaSpec& spec) {
  MarginalLikelihoodWorkspace ws(data, family, BetaPrior::flat());
  return log_prior(theta, spec) + ws.log_likelihood(theta);
}

void print_model_banner(const ProgressReporter& progress, const SpatialDataset& data, const CovFamily& family,
                        const ThetaSpec& spec, const BetaPrior& beta_prior, const SamplerOptions& options,
                        const std::string& low_rank_line) {
  if (!progress.enabled()) return;
  std::ostream& os = *progress.stream();
  os << "----------------------------------------\n"
     << "\tGeneral model description\n"
     << "----------------------------------------\n"
     << "Model fit with " << data.n() << " observations.\n\n"
     << "Number of covariates " << data.p() << " (including intercept if specified).\n\n"
     << "Using the " << family.name() << " spatial correlation model.\n\n";
  if (!low_rank_line.empty()) os << low_rank_line << "\n\n";
  os << "Number of MCMC samples " << options.n_samples << ".\n\n";
  if (options.adaptive)
    os << "Using adaptive MCMC (batch length " << options.adapt_batch << ", target acceptance "
       << options.adapt_target << ").\n\n";
  os << "Priors and hyperpriors:\n";
  if (beta_prior.is_flat()) {
    os << "\tbeta flat.\n";
  } else {
    os << "\tbeta normal:\n\tmu:";
    for (Index i = 0; i < beta_prior.mu.size(); ++i) os << "\t" << beta_prior.mu[i];
    os << "\n";
  }
  for (const auto& c : spec.components()) os << "\t" << c.prior.describe(to_string(c.name)) << "\n";
}

ThetaChain fit_full_rank(const SpatialDataset& data, const CovFamily& family, const ThetaSpec& spec,
                         const BetaPrior& beta_prior, const SamplerOptions& options,
                         const ProgressReporter* progress) {
  options.validate();
  if (progress) {
    print_model_banner(*progress, data, family, spec, beta_prior, options);
    progress->heading("Sampling");
  }
  MarginalLikelihoodWorkspace ws(data, family, beta_prior);
  RandomStream rng(options.seed);
  return run_theta_chain(
      spec, options, [&ws](const ProcessParams& theta) { return ws.log_likelihood(theta); }, rng, progress);
}

}  // namespace geomc
