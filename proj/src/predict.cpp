#include "geomc/predict.hpp"

#include <cmath>

namespace geomc {

namespace {

// Predictive variances below -kVarianceFloor * scale signal a genuine loss of
// definiteness rather than rounding.
constexpr double kVarianceFloor = 1e-10;

Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// One draw from N(mean, cov), jointly or location by location.
Vector draw_predictive(const PredictiveMoments& mom, bool joint, RandomStream& rng) {
  const Index t = mom.mean.size();
  const double scale = std::max(1.0, mom.var.cwiseAbs().maxCoeff());
  if (joint) {
    CholFactor<double> l;
    try {
      chol_into(l, symmetric_part(mom.cov), 0.0, "predictive covariance");
    } catch (const Error& e) {
      rethrow_with_context(e, "joint prediction failed; predict one location at a time instead");
    }
    return mvn_transport(mom.mean, l, rng.normals(t));
  }
  Vector y(t);
  for (Index j = 0; j < t; ++j) {
    double v = mom.var[j];
    require(v >= -kVarianceFloor * scale, ErrorKind::NotPositiveDefinite,
            "negative predictive variance at new location " + std::to_string(j + 1));
    v = std::max(v, 0.0);
    y[j] = mom.mean[j] + std::sqrt(v) * rng.normal();
  }
  return y;
}

void report(const ProgressReporter* progress, Index k, Index total) {
  if (!progress) return;
  const Index interval = std::max<Index>(1, total / 4);
  if ((k + 1) % interval == 0 || k + 1 == total)
    progress->sampled(static_cast<long>(k + 1), static_cast<long>(total));
}

}  // namespace

void PredictionRequest::validate(Index p) const {
  require(t() >= 1, ErrorKind::InvalidParam, "no prediction locations");
  require(x.rows() == t(), ErrorKind::DimensionMismatch, "prediction design rows != number of locations");
  require(x.cols() == p, ErrorKind::DimensionMismatch, "prediction design columns != fitted p");
  require(coords.allFinite() && x.allFinite(), ErrorKind::InvalidParam, "non-finite prediction inputs");
}

PredictiveMoments conditional_moments_full(const SpatialDataset& data, const CovFamily& family,
                                           const ProcessParams& theta, const Vector& beta, const Coords& coords0,
                                           const Matrix& x0, bool latent, bool full_cov) {
  const Index t = coords0.rows();
  const auto l = chol(cov_matrix(data.coords, family, theta, true), 0.0, "C11");
  Matrix uv(data.n(), 1 + t);
  uv.col(0) = data.y - data.x * beta;
  uv.rightCols(t) = cross_cov(data.coords, coords0, family, theta);
  trsolve_in_place(l, uv, Side::Lower);
  const auto u = uv.col(0);
  const auto v = uv.rightCols(t);
  PredictiveMoments m;
  m.mean = x0 * beta + v.transpose() * u;
  const double c00 = theta.sigma_sq + (latent ? 0.0 : theta.tau_sq);
  m.var = (c00 - v.colwise().squaredNorm().array()).matrix().transpose();
  if (full_cov) {
    ProcessParams p22 = theta;
    if (latent) p22.tau_sq = 0.0;
    m.cov = cov_matrix(coords0, family, p22, !latent);
    m.cov.noalias() -= v.transpose() * v;
  }
  return m;
}

LowRankPredictor::LowRankPredictor(const PPGeometry& geometry, const CovFamily& family, const ProcessParams& theta,
                                   const Vector& resid, bool modified, PPParametrization parametrization)
    : geometry_(&geometry), family_(family), theta_(theta), modified_(modified) {
  pp_ = build_pp_structure(geometry, family, theta, modified, parametrization);
  const SwmFactor swm(pp_);
  const Matrix a = trsolve(pp_.c_star_chol, pp_.cross.transpose(), Side::Lower);  // r x n
  const Matrix m = diag_right(a, swm.d_inv_sqrt());
  const Matrix q = swm.h_times(m.transpose());  // r x r
  core_ = m * m.transpose();
  core_.noalias() -= q.transpose() * q;
  const Vector vt = swm.d_inv_sqrt().cwiseProduct(resid);
  mean_core_ = m * vt - q.transpose() * swm.h_times(vt);
}

PredictiveMoments LowRankPredictor::moments(const Coords& coords0, const Matrix& x0, const Vector& beta,
                                            bool latent, bool full_cov) const {
  const Matrix c0 = cross_cov(coords0, geometry_->knots, family_, theta_);  // t x r
  const Matrix a0 = trsolve(pp_.c_star_chol, c0.transpose(), Side::Lower);  // r x t
  PredictiveMoments m;
  m.mean = x0 * beta + a0.transpose() * mean_core_;
  Vector d0 = Vector::Constant(coords0.rows(), latent ? 0.0 : theta_.tau_sq);
  if (modified_) d0 += pp_adjustment(c0, pp_.c_star_chol, theta_.sigma_sq);
  const Matrix ca0 = core_ * a0;
  m.var = (a0.colwise().squaredNorm() - a0.cwiseProduct(ca0).colwise().sum()).transpose() + d0;
  if (full_cov) {
    m.cov = a0.transpose() * a0 - a0.transpose() * ca0;
    m.cov.diagonal() += d0;
  }
  return m;
}

NewLocationStructure new_location_structure(const PPStructure& pp, const Coords& knots, const Coords& coords0,
                                            const CovFamily& family, const ProcessParams& theta, bool modified,
                                            bool latent) {
  NewLocationStructure s;
  const Matrix c0 = cross_cov(coords0, knots, family, theta);
  s.z0 = pp.parametrization == PPParametrization::Alternative
             ? c0
             : Matrix(chol_solve(pp.c_star_chol, c0.transpose()).transpose());
  s.d0 = Vector::Constant(coords0.rows(), latent ? 0.0 : theta.tau_sq);
  if (modified) s.d0 += pp_adjustment(c0, pp.c_star_chol, theta.sigma_sq);
  return s;
}

Matrix predict_full_rank(const RecoveredSamples& rec, const SpatialDataset& data, const CovFamily& family,
                         const PredictionRequest& request, const ProgressReporter* progress) {
  request.validate(data.p());
  require(request.mode == PredictMode::Conditional, ErrorKind::InvalidParam,
          "full-rank fits predict by conditioning only");
  require(rec.beta.rows() == rec.size(), ErrorKind::DimensionMismatch, "recovered beta missing");
  const Index m = rec.size();
  const Index t = request.t();
  Matrix out(t, m);
  if (progress) progress->heading("Predicting");
  const RandomStream root(request.seed);
  for (Index k = 0; k < m; ++k) {
    try {
      const ProcessParams theta = rec.params(k);
      const Vector beta = rec.beta.row(k).transpose();
      RandomStream rng = root.substream(static_cast<std::uint64_t>(k));
      const PredictiveMoments mom =
          conditional_moments_full(data, family, theta, beta, request.coords, request.x, request.latent,
                                   request.joint);
      out.col(k) = draw_predictive(mom, request.joint, rng);
    } catch (const Error& e) {
      rethrow_with_context(e, "predictive sample " + std::to_string(k + 1));
    }
    report(progress, k, m);
  }
  return out;
}

Matrix predict_lowrank(const RecoveredSamples& rec, const SpatialDataset& data, const CovFamily& family,
                       const Coords& knots, bool modified, PPParametrization parametrization,
                       const PredictionRequest& request, const ProgressReporter* progress) {
  request.validate(data.p());
  require(rec.beta.rows() == rec.size(), ErrorKind::DimensionMismatch, "beta samples missing");
  const bool via_alpha = request.mode == PredictMode::ViaAlpha;
  if (via_alpha)
    require(rec.alpha.rows() == rec.size() && rec.alpha.cols() == knots.rows(), ErrorKind::DimensionMismatch,
            "via-alpha prediction needs recovered alpha samples");
  const Index m = rec.size();
  const Index t = request.t();
  Matrix out(t, m);
  if (progress) progress->heading("Predicting");
  const PPGeometry geometry = PPGeometry::make(data.coords, knots);
  const RandomStream root(request.seed);
  for (Index k = 0; k < m; ++k) {
    try {
      const ProcessParams theta = rec.params(k);
      const Vector beta = rec.beta.row(k).transpose();
      RandomStream rng = root.substream(static_cast<std::uint64_t>(k));
      if (via_alpha) {
        const PPStructure pp = build_pp_structure(geometry, family, theta, modified, parametrization);
        const NewLocationStructure s =
            new_location_structure(pp, knots, request.coords, family, theta, modified, request.latent);
        const Vector alpha = rec.alpha.row(k).transpose();
        const Vector mean = request.x * beta + s.z0 * alpha;
        for (Index j = 0; j < t; ++j) out(j, k) = mean[j] + std::sqrt(s.d0[j]) * rng.normal();
      } else {
        const LowRankPredictor pred(geometry, family, theta, data.y - data.x * beta, modified, parametrization);
        const PredictiveMoments mom = pred.moments(request.coords, request.x, beta, request.latent, request.joint);
        out.col(k) = draw_predictive(mom, request.joint, rng);
      }
    } catch (const Error& e) {
      rethrow_with_context(e, "predictive sample " + std::to_string(k + 1));
    }
    report(progress, k, m);
  }
  return out;
}

}  // namespace geomc
