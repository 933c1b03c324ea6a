#include "geomc/recover.hpp"

namespace geomc {

namespace {

Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void report_progress(const ProgressReporter* progress, Index k, Index total, Index interval) {
  if (!progress) return;
  if ((k + 1) % interval == 0 || k + 1 == total)
    progress->sampled(static_cast<long>(k + 1), static_cast<long>(total));
}

// Roughly four progress lines per recovery run.
Index progress_interval(Index total) { return std::max<Index>(1, total / 4); }

}  // namespace

std::vector<Index> retained_rows(Index m, Index start, Index thin) {
  require(m >= 1, ErrorKind::InvalidParam, "empty chain");
  require(start >= 1 && start <= m, ErrorKind::InvalidParam,
          "start must lie in [1, " + std::to_string(m) + "]");
  require(thin >= 1, ErrorKind::InvalidParam, "thin must be >= 1");
  std::vector<Index> rows;
  for (Index i = start - 1; i < m; i += thin) rows.push_back(i);
  return rows;
}

Index retained_count(Index m, Index start, Index thin) {
  return static_cast<Index>(retained_rows(m, start, thin).size());
}

BetaConditionalWorkspace::BetaConditionalWorkspace(const SpatialDataset& data, const CovFamily& family,
                                                   const BetaPrior& beta_prior)
    : data_(&data),
      family_(family),
      distances_(pairwise_distances(data.coords, data.coords)),
      prior_precision_(beta_prior.precision(data.p())),
      prior_precision_mean_(beta_prior.precision_times_mean(data.p())) {}

PrecisionForm BetaConditionalWorkspace::conditional(const ProcessParams& theta) {
  const Matrix sigma = cov_from_distances(distances_, family_, theta, true);
  const auto l = chol(sigma, 0.0, "Sigma_{y|beta,theta}");
  const Index p = data_->p();
  Matrix vu(data_->n(), 1 + p);
  vu.col(0) = data_->y;
  vu.rightCols(p) = data_->x;
  trsolve_in_place(l, vu, Side::Lower);
  const auto v = vu.col(0);
  const auto u = vu.rightCols(p);
  PrecisionForm f;
  f.b = prior_precision_mean_ + u.transpose() * v;
  f.l = chol(symmetric_part(prior_precision_ + u.transpose() * u), 0.0, "beta conditional precision");
  return f;
}

Matrix henderson_covariance(const Matrix& k, const Matrix& g) {
  require(k.rows() == g.rows() && k.cols() == g.cols(), ErrorKind::DimensionMismatch, "K and G differ in shape");
  const auto l = chol(symmetric_part(k + g), 0.0, "K + G");
  const Matrix w = trsolve(l, g, Side::Lower);
  Matrix b = g;
  b.noalias() -= w.transpose() * w;
  return b;
}

CovarianceForm henderson_conditional(const Matrix& k, const Matrix& g, const Vector& b) {
  const Matrix cov = henderson_covariance(k, g);
  CovarianceForm f;
  f.b = b;
  try {
    chol_into(f.l, cov, 0.0, "G - W'W");
  } catch (const Error&) {
    try {
      chol_into(f.l, symmetric_part(cov), 0.0, "G - W'W");
    } catch (const Error& e) {
      rethrow_with_context(e, "Henderson covariance lost definiteness after symmetrization; "
                              "try a larger nugget or a smoother correlation family");
    }
  }
  return f;
}

CovarianceForm w_conditional_full(const Matrix& distances, const SpatialDataset& data, const CovFamily& family,
                                  const BetaPrior& beta_prior, const ProcessParams& theta, WConditioning mode,
                                  const Vector* beta) {
  const Index n = data.n();
  ProcessParams latent = theta;
  latent.tau_sq = 0.0;
  const Matrix k = cov_from_distances(distances, family, latent, false);
  Matrix g = Matrix::Identity(n, n) * theta.tau_sq;
  Vector resid;
  if (mode == WConditioning::PriorMean) {
    require(!beta_prior.is_flat(), ErrorKind::InvalidParam,
            "w conditioned on the prior mean of beta needs a normal beta prior");
    g += data.x * beta_prior.sigma * data.x.transpose();
    g = symmetric_part(g);
    resid = data.y - data.x * beta_prior.mu;
  } else {
    require(beta != nullptr && beta->size() == data.p(), ErrorKind::DimensionMismatch,
            "w conditioned on beta needs a p-vector");
    resid = data.y - data.x * *beta;
  }
  const auto lg = chol(g, 0.0, "Sigma_{y|alpha,theta}");
  return henderson_conditional(k, g, chol_solve(lg, resid));
}

Vector draw_alpha_lowrank(const PPStructure& pp, const Vector& resid, const Vector& z) {
  require(resid.size() == pp.n(), ErrorKind::DimensionMismatch, "residual length != n");
  const Vector d_inv_sqrt = pp.d_diag.array().rsqrt();
  const Matrix w = diag_left(d_inv_sqrt, pp.z);
  const Vector v = d_inv_sqrt.cwiseProduct(resid);
  if (pp.parametrization == PPParametrization::Alternative) {
    Matrix prec = pp.k_inverse;
    prec.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
    symmetrize_from_lower(prec);
    PrecisionForm f{w.transpose() * v, chol(prec, 0.0, "alpha conditional precision")};
    return f.draw(z);
  }
  const Matrix ztdz = symmetric_part(w.transpose() * w);
  const auto lz = chol(ztdz, 0.0, "Z'D^{-1}Z");
  const Matrix g = symmetric_part(chol_solve(lz, Matrix::Identity(pp.r(), pp.r())));
  return henderson_conditional(pp.k, g, w.transpose() * v).draw(z);
}

RecoveredSamples recover_full_rank(const ThetaChain& chain, const SpatialDataset& data, const CovFamily& family,
                                   const BetaPrior& beta_prior, const RecoverOptions& options,
                                   const ProgressReporter* progress) {
  RecoveredSamples out;
  out.rows = retained_rows(chain.size(), options.start, options.thin);
  out.theta_names = chain.names;
  const Index m = out.size();
  const Index p = data.p();
  const Index n = data.n();
  const WConditioning mode = beta_prior.is_flat() ? WConditioning::DrawnBeta : options.w_conditioning;

  out.theta_subset.resize(m, chain.samples.cols());
  out.beta.resize(m, p);
  if (options.recover_w) out.w.resize(m, n);
  if (progress) progress->heading("Recovering beta" + std::string(options.recover_w ? " and w" : ""));

  BetaConditionalWorkspace beta_ws(data, family, beta_prior);
  const Matrix distances = options.recover_w ? pairwise_distances(data.coords, data.coords) : Matrix();
  const RandomStream root(options.seed);
  const Index interval = progress_interval(m);
  for (Index k = 0; k < m; ++k) {
    const Index row = out.rows[static_cast<std::size_t>(k)];
    out.theta_subset.row(k) = chain.samples.row(row);
    try {
      const ProcessParams theta = params_from_row(chain, row);
      RandomStream rng = root.substream(static_cast<std::uint64_t>(k));
      const Vector beta = beta_ws.conditional(theta).draw(rng.normals(p));
      out.beta.row(k) = beta.transpose();
      if (options.recover_w) {
        const CovarianceForm wf = w_conditional_full(distances, data, family, beta_prior, theta, mode, &beta);
        out.w.row(k) = wf.draw(rng.normals(n)).transpose();
      }
    } catch (const Error& e) {
      rethrow_with_context(e, "recovered sample " + std::to_string(k + 1));
    }
    report_progress(progress, k, m, interval);
  }
  return out;
}

Matrix recover_beta(const ThetaChain& chain, const SpatialDataset& data, const CovFamily& family,
                    const BetaPrior& beta_prior, Index start, Index thin, std::uint64_t seed) {
  RecoverOptions opts;
  opts.start = start;
  opts.thin = thin;
  opts.recover_w = false;
  opts.seed = seed;
  return recover_full_rank(chain, data, family, beta_prior, opts).beta;
}

RecoveredSamples recover_lowrank(const LowRankFit& fit, const SpatialDataset& data, const CovFamily& family,
                                 const RecoverOptions& options, const ProgressReporter* progress) {
  require(fit.beta.rows() == fit.theta.size(), ErrorKind::DimensionMismatch,
          "beta chain not aligned with theta chain");
  RecoveredSamples out;
  out.rows = retained_rows(fit.theta.size(), options.start, options.thin);
  out.theta_names = fit.theta.names;
  const Index m = out.size();
  const Index r = fit.knots.rows();
  out.theta_subset.resize(m, fit.theta.samples.cols());
  out.beta.resize(m, data.p());
  out.alpha.resize(m, r);
  out.w_star.resize(m, r);
  out.w.resize(m, data.n());
  if (progress) progress->heading("Recovering w");

  const PPGeometry geometry = PPGeometry::make(data.coords, fit.knots);
  const RandomStream root(options.seed);
  const Index interval = progress_interval(m);
  for (Index k = 0; k < m; ++k) {
    const Index row = out.rows[static_cast<std::size_t>(k)];
    out.theta_subset.row(k) = fit.theta.samples.row(row);
    out.beta.row(k) = fit.beta.row(row);
    try {
      const ProcessParams theta = params_from_row(fit.theta, row);
      const PPStructure pp = build_pp_structure(geometry, family, theta, fit.modified, fit.parametrization);
      RandomStream rng = root.substream(static_cast<std::uint64_t>(k));
      const Vector beta = fit.beta.row(row).transpose();
      const Vector alpha = draw_alpha_lowrank(pp, data.y - data.x * beta, rng.normals(r));
      out.alpha.row(k) = alpha.transpose();
      out.w_star.row(k) =
          (fit.parametrization == PPParametrization::Alternative ? Vector(pp.c_star * alpha) : alpha).transpose();
      out.w.row(k) = (pp.z * alpha).transpose();
    } catch (const Error& e) {
      rethrow_with_context(e, "recovered sample " + std::to_string(k + 1));
    }
    report_progress(progress, k, m, interval);
  }
  return out;
}

}  // namespace geomc
