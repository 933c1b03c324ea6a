#include "geomc/lowrank.hpp"

#include <cmath>
#include <sstream>

#include "geomc/full_rank.hpp"

namespace geomc {

namespace {

// Relative tolerance below which a negative projection residual is treated
// as rounding and clamped to zero.
constexpr double kAdjustmentTolerance = 1e-8;

Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

PPGeometry PPGeometry::make(const Coords& coords, const Coords& knots) {
  require(knots.rows() > 0, ErrorKind::InvalidParam, "no knots");
  require(knots.rows() < coords.rows(), ErrorKind::TooManyKnots, "number of knots must be below n");
  PPGeometry g;
  g.coords = coords;
  g.knots = knots;
  g.knot_dist = pairwise_distances(knots, knots);
  g.cross_dist = pairwise_distances(coords, knots);
  return g;
}

Vector pp_adjustment(const Matrix& cross, const CholFactor<double>& c_star_chol, double sigma_sq) {
  const Matrix a = trsolve(c_star_chol, cross.transpose(), Side::Lower);  // r x n
  Vector adj(cross.rows());
  for (Index i = 0; i < adj.size(); ++i) {
    double v = sigma_sq - a.col(i).squaredNorm();
    if (v < 0.0) {
      require(v >= -kAdjustmentTolerance * sigma_sq, ErrorKind::InvalidParam,
              "negative predictive-process variance adjustment at location " + std::to_string(i));
      v = 0.0;
    }
    adj[i] = v;
  }
  return adj;
}

PPStructure build_pp_structure(const PPGeometry& geometry, const CovFamily& family, const ProcessParams& params,
                               bool modified, PPParametrization parametrization) {
  validate_params(family, params);
  PPStructure pp;
  pp.parametrization = parametrization;
  pp.c_star = cov_from_distances(geometry.knot_dist, family, params, false);
  try {
    chol_into(pp.c_star_chol, pp.c_star, 0.0, "knot covariance C*");
  } catch (const Error& e) {
    rethrow_with_context(e, "knots may be too close together");
  }
  pp.cross = cov_from_distances(geometry.cross_dist, family, params, false);

  pp.d_diag = Vector::Constant(geometry.n(), params.tau_sq);
  if (modified) pp.d_diag += pp_adjustment(pp.cross, pp.c_star_chol, params.sigma_sq);
  for (Index i = 0; i < pp.d_diag.size(); ++i)
    require(pp.d_diag[i] > 0.0, ErrorKind::InvalidParam, "D(theta) has a zero diagonal entry");

  if (parametrization == PPParametrization::Alternative) {
    pp.z = pp.cross;
    pp.k_inverse = pp.c_star;
  } else {
    pp.k = pp.c_star;
    pp.z = chol_solve(pp.c_star_chol, pp.cross.transpose()).transpose();
    pp.k_inverse = symmetric_part(chol_solve(pp.c_star_chol, Matrix::Identity(geometry.r(), geometry.r())));
  }
  return pp;
}

PPStructure build_pp_structure(const Coords& coords, const Coords& knots, const CovFamily& family,
                               const ProcessParams& params, bool modified, PPParametrization parametrization) {
  return build_pp_structure(PPGeometry::make(coords, knots), family, params, modified, parametrization);
}

SwmFactor::SwmFactor(const PPStructure& pp) {
  d_inv_sqrt_ = pp.d_diag.array().rsqrt();
  log_det_d_ = pp.d_diag.array().log().sum();
  w_ = diag_left(d_inv_sqrt_, pp.z);
  Matrix core = pp.k_inverse;
  core.selfadjointView<Eigen::Lower>().rankUpdate(w_.transpose());
  symmetrize_from_lower(core);
  chol_into(l_, core, 0.0, "K^{-1} + W'W");
  // I - HH' = L^{-1} K^{-1} L'^{-1}
  Matrix m = trsolve(l_, pp.k_inverse, Side::Lower);
  m = trsolve(l_, m.transpose(), Side::Lower);
  chol_into(t_, symmetric_part(m), 0.0, "I - HH'");
}

Matrix SwmFactor::h_times(const Matrix& x) const {
  require(x.rows() == w_.rows(), ErrorKind::DimensionMismatch, "H x: wrong row count");
  Matrix out = w_.transpose() * x;
  trsolve_in_place(l_, out, Side::Lower);
  return out;
}

Matrix SwmFactor::ht_times(const Matrix& y) const {
  require(y.rows() == w_.cols(), ErrorKind::DimensionMismatch, "H' y: wrong row count");
  return w_ * trsolve(l_, y, Side::Upper);
}

Matrix SwmFactor::h() const { return trsolve(l_, w_.transpose(), Side::Lower); }

Matrix SwmFactor::apply_inverse(const Matrix& rhs) const {
  require(rhs.rows() == w_.rows(), ErrorKind::DimensionMismatch, "Sigma^{-1} x: wrong row count");
  const Matrix xt = diag_left(d_inv_sqrt_, rhs);
  return diag_left(d_inv_sqrt_, xt - ht_times(h_times(xt)));
}

Matrix swm_apply(const PPStructure& pp, const Matrix& rhs) { return SwmFactor(pp).apply_inverse(rhs); }

double lowrank_log_likelihood(const SwmFactor& swm, const Vector& resid) {
  const Vector v = swm.d_inv_sqrt().cwiseProduct(resid);
  const Vector w = swm.h_times(v);
  return -0.5 * swm.log_det() - 0.5 * (v.squaredNorm() - w.squaredNorm());
}

double lowrank_log_target(const ProcessParams& theta, const PPStructure& pp, const SpatialDataset& data,
                          const Vector& beta, const ThetaSpec& spec) {
  const SwmFactor swm(pp);
  return log_prior(theta, spec) + lowrank_log_likelihood(swm, data.y - data.x * beta);
}

PrecisionForm beta_conditional_lowrank(const SwmFactor& swm, const SpatialDataset& data,
                                       const Matrix& prior_precision, const Vector& prior_precision_mean) {
  const Index p = data.p();
  require(prior_precision.rows() == p && prior_precision_mean.size() == p, ErrorKind::DimensionMismatch,
          "beta prior dimension != p");
  const Vector v = swm.d_inv_sqrt().cwiseProduct(data.y);
  const Matrix vx = diag_left(swm.d_inv_sqrt(), data.x);
  const Matrix vt = swm.h_times(vx);  // r x p
  const Vector hv = swm.h_times(v);
  PrecisionForm f;
  f.b = prior_precision_mean + vx.transpose() * v - vt.transpose() * hv;
  Matrix prec = prior_precision + vx.transpose() * vx - vt.transpose() * vt;
  f.l = chol(symmetric_part(prec), 0.0, "beta full conditional precision");
  return f;
}

LowRankGibbs::LowRankGibbs(const SpatialDataset& data, const CovFamily& family, const Coords& knots,
                           bool modified, const ThetaSpec& spec, const BetaPrior& beta_prior,
                           const SamplerOptions& options, PPParametrization parametrization)
    : data_(data),
      family_(family),
      geometry_(PPGeometry::make(data.coords, knots)),
      modified_(modified),
      parametrization_(parametrization),
      spec_(spec),
      prior_precision_(beta_prior.precision(data.p())),
      prior_precision_mean_(beta_prior.precision_times_mean(data.p())),
      kernel_(spec, options, MetropolisKernel::OnError::Reject) {
  // Start beta at ordinary least squares.
  const auto xtx = chol(Matrix(data.x.transpose() * data.x));
  beta_ = chol_solve(xtx, data.x.transpose() * data.y);
  const Vector resid = data.y - data.x * beta_;
  kernel_.initialize([&](const ProcessParams& theta) {
    pp_ = build_pp_structure(geometry_, family_, theta, modified_, parametrization_);
    swm_.emplace(pp_);
    return lowrank_log_likelihood(*swm_, resid);
  });
}

const Vector& LowRankGibbs::update_beta(RandomStream& rng) {
  const PrecisionForm cond = beta_conditional_lowrank(*swm_, data_, prior_precision_, prior_precision_mean_);
  beta_ = cond.draw(rng.normals(data_.p()));
  return beta_;
}

bool LowRankGibbs::update_theta(RandomStream& rng) {
  const Vector resid = data_.y - data_.x * beta_;
  kernel_.refresh(lowrank_log_likelihood(*swm_, resid));
  bool moved = false;
  kernel_.scan(
      [&](const ProcessParams& theta) {
        candidate_pp_ = build_pp_structure(geometry_, family_, theta, modified_, parametrization_);
        candidate_swm_.emplace(candidate_pp_);
        return lowrank_log_likelihood(*candidate_swm_, resid);
      },
      rng,
      [&] {
        std::swap(pp_, candidate_pp_);
        std::swap(swm_, candidate_swm_);
        moved = true;
      });
  return moved;
}

LowRankFit fit_lowrank(const SpatialDataset& data, const CovFamily& family, const KnotSpec& knot_spec,
                       const ThetaSpec& spec, const BetaPrior& beta_prior, const SamplerOptions& options,
                       const ProgressReporter* progress, PPParametrization parametrization) {
  options.validate();
  LowRankFit fit;
  fit.knots = build_knots(knot_spec, data.coords);
  fit.modified = knot_spec.modified;
  fit.parametrization = parametrization;
  if (progress) {
    std::ostringstream line;
    line << "Using " << (knot_spec.modified ? "modified" : "non-modified") << " predictive process with "
         << fit.knots.rows() << " knots.";
    print_model_banner(*progress, data, family, spec, beta_prior, options, line.str());
    progress->heading("Sampling");
  }

  RandomStream rng(options.seed);
  LowRankGibbs gibbs(data, family, fit.knots, knot_spec.modified, spec, beta_prior, options, parametrization);
  fit.theta.names = spec.names();
  fit.theta.samples.resize(options.n_samples, spec.size());
  fit.theta.log_targets.resize(options.n_samples);
  fit.beta.resize(options.n_samples, data.p());
  for (Index it = 0; it < options.n_samples; ++it) {
    try {
      gibbs.update_beta(rng);
      gibbs.update_theta(rng);
    } catch (const Error& e) {
      rethrow_with_context(e, "iteration " + std::to_string(it + 1));
    }
    fit.beta.row(it) = gibbs.beta().transpose();
    fit.theta.samples.row(it) = gibbs.kernel().theta().transpose();
    fit.theta.log_targets[it] = gibbs.kernel().log_target();
    if ((it + 1) % options.report_interval == 0 || it + 1 == options.n_samples) {
      fit.theta.interval_rates.push_back(gibbs.kernel().interval_rate());
      if (progress) {
        progress->sampled(static_cast<long>(it + 1), static_cast<long>(options.n_samples));
        progress->acceptance(gibbs.kernel().interval_rate(), gibbs.kernel().overall_rate());
        progress->separator();
      }
      gibbs.kernel().reset_interval();
    }
  }
  if (progress && gibbs.kernel().failed_evaluations() > 0)
    progress->line("Warning: " + std::to_string(gibbs.kernel().failed_evaluations()) +
                   " theta proposals could not be evaluated and were rejected.");
  fit.theta.proposals = gibbs.kernel().proposals();
  fit.theta.accepted = gibbs.kernel().accepted();
  fit.theta.final_tuning_sd = gibbs.kernel().tuning_sd();
  return fit;
}

}  // namespace geomc
