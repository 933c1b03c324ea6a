#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "geomc/model_spec.hpp"
#include "geomc/random.hpp"
#include "geomc/report.hpp"

namespace geomc {

/// Posterior draws of theta on the constrained scale, one row per iteration.
struct ThetaChain {
  std::vector<std::string> names;
  Matrix samples;
  Vector log_targets;
  long proposals = 0;
  long accepted = 0;
  std::vector<double> interval_rates;
  Vector final_tuning_sd;

  Index size() const { return samples.rows(); }
  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

/// The process parameters stored in row `row` of a draws matrix whose
/// columns are named by `names` (sigma.sq, tau.sq, phi[, nu]).
inline ProcessParams params_from_row(const std::vector<std::string>& names, const Matrix& samples, Index row) {
  require(row >= 0 && row < samples.rows(), ErrorKind::InvalidParam, "chain row out of range");
  require(static_cast<Index>(names.size()) == samples.cols(), ErrorKind::DimensionMismatch,
          "chain names do not match its columns");
  ProcessParams p;
  bool have_sigma = false, have_tau = false, have_phi = false;
  for (std::size_t j = 0; j < names.size(); ++j) {
    const double v = samples(row, static_cast<Index>(j));
    if (names[j] == "sigma.sq") {
      p.sigma_sq = v;
      have_sigma = true;
    } else if (names[j] == "tau.sq") {
      p.tau_sq = v;
      have_tau = true;
    } else if (names[j] == "phi") {
      p.phi = v;
      have_phi = true;
    } else if (names[j] == "nu") {
      p.nu = v;
    }
  }
  require(have_sigma && have_tau && have_phi, ErrorKind::InvalidParam,
          "chain lacks one of sigma.sq, tau.sq, phi");
  return p;
}

inline ProcessParams params_from_row(const ThetaChain& chain, Index row) {
  return params_from_row(chain.names, chain.samples, row);
}

/// Random-walk Metropolis over theta on the unconstrained scale.
///
/// Non-adaptive: one joint proposal z' = z + sd .* N(0, I) per scan with a
/// single accept/reject. Adaptive: Metropolis-within-Gibbs, one proposal per
/// component per scan, with every component's log proposal sd nudged by
/// +/- min(0.01, batch^{-1/2}) after each batch toward the target rate.
///
/// The target is log_likelihood(theta) + log_prior_with_jacobian(z). The
/// current target is cached; rejected proposals never trigger a recompute.
class MetropolisKernel {
 public:
  enum class OnError {
    Propagate,  ///< evaluation failures abort the chain
    Reject,     ///< evaluation failures count as rejections
  };

  MetropolisKernel(const ThetaSpec& spec, const SamplerOptions& options, OnError on_error)
      : spec_(spec),
        adaptive_(options.adaptive),
        adapt_batch_(options.adapt_batch),
        adapt_target_(options.adapt_target),
        on_error_(on_error),
        log_sd_(spec.tuning_sd().array().log()),
        batch_accepts_(Vector::Zero(spec.size())) {}

  template <typename LogLik>
  void initialize(LogLik&& log_likelihood) {
    z_ = transform_theta(spec_.start(), spec_);
    params_ = inverse_transform_theta(z_, spec_);
    log_target_ = log_likelihood(params_) + log_prior_with_jacobian(z_, spec_);
    require(std::isfinite(log_target_), ErrorKind::InvalidParam, "log target not finite at starting values");
  }

  /// Re-evaluated likelihood of the current state, for Gibbs schemes whose
  /// other blocks changed since the last scan.
  void refresh(double log_likelihood_current) {
    log_target_ = log_likelihood_current + log_prior_with_jacobian(z_, spec_);
  }

  /// One scan. `on_accept()` runs right after each accepted proposal so that
  /// callers can promote whatever they cached during the last evaluation.
  template <typename LogLik, typename OnAccept>
  void scan(LogLik&& log_likelihood, RandomStream& rng, OnAccept&& on_accept) {
    if (!adaptive_) {
      Vector prop = z_;
      for (Index i = 0; i < prop.size(); ++i) prop[i] += std::exp(log_sd_[i]) * rng.normal();
      if (try_move(prop, log_likelihood, rng)) on_accept();
    } else {
      for (Index i = 0; i < z_.size(); ++i) {
        Vector prop = z_;
        prop[i] += std::exp(log_sd_[i]) * rng.normal();
        if (try_move(prop, log_likelihood, rng)) {
          batch_accepts_[i] += 1.0;
          on_accept();
        }
      }
      if (++batch_iter_ == adapt_batch_) adapt();
    }
  }

  template <typename LogLik>
  void scan(LogLik&& log_likelihood, RandomStream& rng) {
    scan(std::forward<LogLik>(log_likelihood), rng, [] {});
  }

  const Vector& z() const { return z_; }
  const ProcessParams& params() const { return params_; }
  Vector theta() const { return spec_.from_params(params_); }
  double log_target() const { return log_target_; }
  Vector tuning_sd() const { return log_sd_.array().exp(); }

  long proposals() const { return proposals_; }
  long accepted() const { return accepted_; }
  long failed_evaluations() const { return failed_; }
  double overall_rate() const { return rate(accepted_, proposals_); }
  double interval_rate() const { return rate(accepted_ - interval_accepted0_, proposals_ - interval_proposals0_); }
  void reset_interval() {
    interval_accepted0_ = accepted_;
    interval_proposals0_ = proposals_;
  }

 private:
  static double rate(long a, long p) { return p == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(p); }

  template <typename LogLik>
  bool try_move(const Vector& prop, LogLik& log_likelihood, RandomStream& rng) {
    ++proposals_;
    const ProcessParams prop_params = inverse_transform_theta(prop, spec_);
    double target = 0.0;
    try {
      target = log_likelihood(prop_params) + log_prior_with_jacobian(prop, spec_);
    } catch (const Error&) {
      if (on_error_ == OnError::Propagate) throw;
      ++failed_;
      return false;
    }
    const double log_u = std::log(rng.uniform());
    if (!(log_u < target - log_target_)) return false;
    z_ = prop;
    params_ = prop_params;
    log_target_ = target;
    ++accepted_;
    return true;
  }

  void adapt() {
    ++batch_count_;
    const double delta = std::min(0.01, 1.0 / std::sqrt(static_cast<double>(batch_count_)));
    for (Index i = 0; i < log_sd_.size(); ++i) {
      const double r = batch_accepts_[i] / static_cast<double>(adapt_batch_);
      log_sd_[i] += r > adapt_target_ ? delta : -delta;
    }
    batch_accepts_.setZero();
    batch_iter_ = 0;
  }

  ThetaSpec spec_;
  bool adaptive_;
  Index adapt_batch_;
  double adapt_target_;
  OnError on_error_;
  Vector log_sd_;
  Vector batch_accepts_;
  Index batch_iter_ = 0;
  long batch_count_ = 0;

  Vector z_;
  ProcessParams params_;
  double log_target_ = 0.0;
  long proposals_ = 0;
  long accepted_ = 0;
  long failed_ = 0;
  long interval_accepted0_ = 0;
  long interval_proposals0_ = 0;
};

/// Runs a stand-alone Metropolis chain for n_samples scans with the given
/// likelihood, reporting progress every report_interval scans.
template <typename LogLik>
ThetaChain run_theta_chain(const ThetaSpec& spec, const SamplerOptions& options, LogLik&& log_likelihood,
                           RandomStream& rng, const ProgressReporter* progress,
                           MetropolisKernel::OnError on_error = MetropolisKernel::OnError::Propagate) {
  options.validate();
  MetropolisKernel kernel(spec, options, on_error);
  kernel.initialize(log_likelihood);

  ThetaChain chain;
  chain.names = spec.names();
  chain.samples.resize(options.n_samples, spec.size());
  chain.log_targets.resize(options.n_samples);
  for (Index it = 0; it < options.n_samples; ++it) {
    try {
      kernel.scan(log_likelihood, rng);
    } catch (const Error& e) {
      rethrow_with_context(e, "iteration " + std::to_string(it + 1));
    }
    chain.samples.row(it) = kernel.theta().transpose();
    chain.log_targets[it] = kernel.log_target();
    if ((it + 1) % options.report_interval == 0 || it + 1 == options.n_samples) {
      chain.interval_rates.push_back(kernel.interval_rate());
      if (progress) {
        progress->sampled(static_cast<long>(it + 1), static_cast<long>(options.n_samples));
        progress->acceptance(kernel.interval_rate(), kernel.overall_rate());
        progress->separator();
      }
      kernel.reset_interval();
    }
  }
  chain.proposals = kernel.proposals();
  chain.accepted = kernel.accepted();
  chain.final_tuning_sd = kernel.tuning_sd();
  return chain;
}

}  // namespace geomc
