#include "geomc/dynamic.hpp"

#include <cmath>
#include <cstdio>

namespace geomc {

namespace {

Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix inverse_from_chol(const CholFactor<double>& l) {
  return symmetric_part(chol_solve(l, Matrix::Identity(l.size(), l.size())));
}

CholFactor<double> correlation_chol(const Matrix& distances, const CovFamily& family, double phi,
                                    std::optional<double> nu) {
  ProcessParams p;
  p.sigma_sq = 1.0;
  p.phi = phi;
  p.nu = nu;
  return chol(cov_from_distances(distances, family, p, false), 0.0, "R(phi)");
}

// log N(w | 0, sigma^2 R) up to a constant, given chol(R).
double latent_log_density(const Vector& w, double sigma_sq, const CholFactor<double>& r_chol) {
  const Vector z = trsolve(r_chol, w, Side::Lower);
  return -half_log_det(r_chol) - 0.5 * z.squaredNorm() / sigma_sq;
}

Vector previous_u(const DynamicState& state, Index t) {
  return t == 1 ? Vector::Zero(state.u.rows()) : Vector(state.u.col(t - 2));
}

}  // namespace

DynamicDataset DynamicDataset::make(Coords coords, Matrix y, std::vector<Matrix> x) {
  const Index n = coords.rows();
  const Index steps = y.cols();
  require(n > 0 && steps > 0, ErrorKind::InvalidParam, "empty dynamic dataset");
  require(y.rows() == n, ErrorKind::DimensionMismatch, "y rows != number of stations");
  require(static_cast<Index>(x.size()) == steps, ErrorKind::DimensionMismatch,
          "one design matrix per time step is required");
  require(coords.allFinite(), ErrorKind::InvalidParam, "non-finite coordinates");
  const Index p = x.front().cols();
  for (Index t = 0; t < steps; ++t) {
    const Matrix& xt = x[static_cast<std::size_t>(t)];
    require(xt.rows() == n && xt.cols() == p, ErrorKind::DimensionMismatch,
            "design at time step " + std::to_string(t + 1) + " has the wrong shape");
    require(xt.allFinite(), ErrorKind::InvalidParam,
            "non-finite covariate at time step " + std::to_string(t + 1));
  }
  DynamicDataset d;
  d.missing = y.array().isNaN();
  for (Index t = 0; t < steps; ++t)
    require(!d.missing.col(t).all(), ErrorKind::AllMissingStep,
            "time step " + std::to_string(t + 1) + " has no observed outcome");
  for (Index t = 0; t < steps; ++t)
    for (Index i = 0; i < n; ++i)
      require(d.missing(i, t) || std::isfinite(y(i, t)), ErrorKind::InvalidParam, "infinite outcome");
  d.coords = std::move(coords);
  d.y = std::move(y);
  d.x = std::move(x);
  return d;
}

void DynamicPriors::validate(Index p, Index steps) const {
  require(m0.size() == p && sigma0.rows() == p && sigma0.cols() == p, ErrorKind::DimensionMismatch,
          "beta_0 prior dimension != p");
  chol(sigma0, 0.0, "Sigma_0");
  // The prior may be improper (df <= p - 1) as long as the full conditional is not.
  require(sigma_eta.df > 0.0, ErrorKind::InvalidParam, "IW df must be positive");
  require(sigma_eta.df + static_cast<double>(steps) > static_cast<double>(p) - 1.0, ErrorKind::InvalidParam,
          "IW df plus the number of time steps must exceed p - 1");
  require(sigma_eta.scale.rows() == p && sigma_eta.scale.cols() == p, ErrorKind::DimensionMismatch,
          "IW scale must be p x p");
  chol(sigma_eta.scale, 0.0, "IW scale");
  auto check = [&](const std::vector<ScalarPrior>& v, ScalarPrior::Kind kind, const char* what) {
    require(static_cast<Index>(v.size()) == steps, ErrorKind::DimensionMismatch,
            std::string("one ") + what + " prior per time step is required");
    for (const auto& pr : v)
      require(pr.kind == kind, ErrorKind::InvalidParam, std::string("wrong prior family for ") + what);
  };
  check(sigma_sq, ScalarPrior::Kind::InverseGamma, "sigma.sq");
  check(tau_sq, ScalarPrior::Kind::InverseGamma, "tau.sq");
  check(phi, ScalarPrior::Kind::Uniform, "phi");
}

Matrix draw_inverse_wishart(double df, const Matrix& scale, RandomStream& rng) {
  const Index p = scale.rows();
  require(df > static_cast<double>(p) - 1.0, ErrorKind::InvalidParam, "IW df must exceed p - 1");
  const auto u = chol(symmetric_part(scale), 0.0, "IW scale");
  Matrix a = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Matrix bt = trsolve(a, u.lower().transpose(), Side::Lower);
  return symmetric_part(bt.transpose() * bt);
}

InverseWishart sigma_eta_posterior(const DynamicState& state, const DynamicPriors& priors) {
  InverseWishart post;
  const Index steps = state.beta.cols();
  post.df = priors.sigma_eta.df + static_cast<double>(steps);
  post.scale = priors.sigma_eta.scale;
  for (Index t = 0; t < steps; ++t) {
    const Vector d = state.beta.col(t) - (t == 0 ? state.beta0 : Vector(state.beta.col(t - 1)));
    post.scale.noalias() += d * d.transpose();
  }
  return post;
}

PrecisionForm beta_conditional_dynamic(const DynamicDataset& data, const DynamicState& state,
                                       const DynamicPriors& priors, Index t) {
  const Index steps = data.steps();
  require(t >= 0 && t <= steps, ErrorKind::InvalidParam, "time index out of range");
  const Matrix eta_inv = inverse_from_chol(chol(state.sigma_eta, 0.0, "Sigma_eta"));
  PrecisionForm f;
  if (t == 0) {
    const auto l0 = chol(priors.sigma0, 0.0, "Sigma_0");
    f.b = chol_solve(l0, priors.m0) + eta_inv * state.beta.col(0);
    f.l = chol(symmetric_part(inverse_from_chol(l0) + eta_inv), 0.0, "beta_0 precision");
    return f;
  }
  const Matrix& x = data.x[static_cast<std::size_t>(t - 1)];
  const double tau_sq = state.tau_sq[t - 1];
  const bool has_next = t < steps;
  Vector neighbours = t == 1 ? state.beta0 : Vector(state.beta.col(t - 2));
  if (has_next) neighbours += state.beta.col(t);
  const Vector resid = state.y.col(t - 1) - state.u.col(t - 1);
  f.b = eta_inv * neighbours + x.transpose() * resid / tau_sq;
  Matrix prec = eta_inv * (has_next ? 2.0 : 1.0);
  prec.noalias() += x.transpose() * x / tau_sq;
  f.l = chol(symmetric_part(prec), 0.0, "beta_t precision");
  return f;
}

PrecisionForm u_conditional_dynamic(const DynamicDataset& data, const DynamicState& state, Index t,
                                    const std::vector<CholFactor<double>>& r_chol) {
  const Index steps = data.steps();
  require(t >= 1 && t <= steps, ErrorKind::InvalidParam, "time index out of range");
  const auto& lt = r_chol[static_cast<std::size_t>(t - 1)];
  const double tau_sq = state.tau_sq[t - 1];
  const double s_t = state.sigma_sq[t - 1];
  PrecisionForm f;
  Matrix prec = inverse_from_chol(lt) / s_t;
  f.b = chol_solve(lt, previous_u(state, t)) / s_t;
  if (t < steps) {
    const auto& ln = r_chol[static_cast<std::size_t>(t)];
    const double s_n = state.sigma_sq[t];
    prec += inverse_from_chol(ln) / s_n;
    f.b += chol_solve(ln, Vector(state.u.col(t))) / s_n;
  }
  prec.diagonal().array() += 1.0 / tau_sq;
  const Matrix& x = data.x[static_cast<std::size_t>(t - 1)];
  f.b += (state.y.col(t - 1) - x * state.beta.col(t - 1)) / tau_sq;
  f.l = chol(symmetric_part(prec), 0.0, "u_t precision");
  return f;
}

std::pair<double, double> sigma_sq_posterior(const DynamicState& state, const DynamicPriors& priors, Index t,
                                             const CholFactor<double>& r_chol) {
  const Vector w = state.u.col(t - 1) - previous_u(state, t);
  const double q = trsolve(r_chol, w, Side::Lower).squaredNorm();
  const auto& pr = priors.sigma_sq[static_cast<std::size_t>(t - 1)];
  return {pr.a + 0.5 * static_cast<double>(w.size()), pr.b + 0.5 * q};
}

std::pair<double, double> tau_sq_posterior(const DynamicDataset& data, const DynamicState& state,
                                           const DynamicPriors& priors, Index t) {
  const Matrix& x = data.x[static_cast<std::size_t>(t - 1)];
  const Vector r = state.y.col(t - 1) - x * state.beta.col(t - 1) - state.u.col(t - 1);
  const auto& pr = priors.tau_sq[static_cast<std::size_t>(t - 1)];
  return {pr.a + 0.5 * static_cast<double>(r.size()), pr.b + 0.5 * r.squaredNorm()};
}

std::optional<Index> intercept_column(const DynamicDataset& data) {
  for (Index j = 0; j < data.p(); ++j) {
    bool ones = true;
    for (const Matrix& x : data.x) ones = ones && (x.col(j).array() == 1.0).all();
    if (ones) return j;
  }
  return std::nullopt;
}

PrecisionForm level_shift_conditional(const DynamicState& state, const DynamicPriors& priors, Index column,
                                      const std::vector<CholFactor<double>>& r_chol) {
  const Index steps = state.beta.cols();
  require(column >= 0 && column < state.beta.rows(), ErrorKind::InvalidParam, "intercept column out of range");
  // Shift precision and linear term, indexed by delta_0..delta_T. Every term
  // couples neighbouring indices only, so q is tridiagonal.
  Matrix q = Matrix::Zero(steps + 1, steps + 1);
  Vector b = Vector::Zero(steps + 1);
  auto couple = [&](Index t, double weight, double slope) {
    // adds -weight/2 (delta_t - delta_{t-1})^2 + slope (delta_t - delta_{t-1})
    q(t, t) += weight;
    q(t - 1, t - 1) += weight;
    q(t, t - 1) -= weight;
    q(t - 1, t) -= weight;
    b[t] += slope;
    b[t - 1] -= slope;
  };

  const auto l0 = chol(priors.sigma0, 0.0, "Sigma_0");
  const Vector s0_col = chol_solve(l0, Vector(Vector::Unit(state.beta.rows(), column)));
  q(0, 0) += s0_col[column];
  b[0] -= s0_col.dot(state.beta0 - priors.m0);

  const auto le = chol(state.sigma_eta, 0.0, "Sigma_eta");
  const Vector se_col = chol_solve(le, Vector(Vector::Unit(state.beta.rows(), column)));
  const Vector ones = Vector::Ones(state.u.rows());
  for (Index t = 1; t <= steps; ++t) {
    const Vector d_beta = state.beta.col(t - 1) - (t == 1 ? state.beta0 : Vector(state.beta.col(t - 2)));
    couple(t, se_col[column], -se_col.dot(d_beta));

    const auto& lt = r_chol[static_cast<std::size_t>(t - 1)];
    const Vector a1 = trsolve(lt, ones, Side::Lower);
    const Vector aw = trsolve(lt, Vector(state.u.col(t - 1) - previous_u(state, t)), Side::Lower);
    const double weight = a1.squaredNorm() / state.sigma_sq[t - 1];
    const double slope = a1.dot(aw) / state.sigma_sq[t - 1];
    if (t == 1) {
      // u_0 = 0 is not shifted
      q(1, 1) += weight;
      b[1] += slope;
    } else {
      couple(t, weight, slope);
    }
  }
  PrecisionForm f;
  f.b = b;
  f.l = chol(q, 0.0, "level shift precision");
  return f;
}

void apply_level_shift(DynamicState& state, Index column, const Vector& delta) {
  const Index steps = state.beta.cols();
  require(delta.size() == steps + 1, ErrorKind::DimensionMismatch, "level shift needs T + 1 values");
  state.beta0[column] += delta[0];
  for (Index t = 1; t <= steps; ++t) {
    state.beta(column, t - 1) += delta[t];
    state.u.col(t - 1).array() -= delta[t];
  }
}

void impute_missing(const DynamicDataset& data, DynamicState& state, RandomStream& rng) {
  for (Index t = 0; t < data.steps(); ++t) {
    if (!data.missing.col(t).any()) continue;
    const Matrix& x = data.x[static_cast<std::size_t>(t)];
    const double sd = std::sqrt(state.tau_sq[t]);
    for (Index i = 0; i < data.n(); ++i) {
      if (!data.missing(i, t)) continue;
      state.y(i, t) = x.row(i).dot(state.beta.col(t)) + state.u(i, t) + sd * rng.normal();
    }
  }
}

namespace {

void print_dynamic_banner(const ProgressReporter& progress, const DynamicDataset& data, const CovFamily& family,
                          const DynamicPriors& priors, const DynamicOptions& options) {
  if (!progress.enabled()) return;
  std::ostream& os = *progress.stream();
  os << "----------------------------------------\n"
     << "\tGeneral model description\n"
     << "----------------------------------------\n"
     << "Model fit with " << data.n() << " observations in " << data.steps() << " time steps.\n\n"
     << "Number of missing observations " << data.missing_count() << ".\n\n"
     << "Number of covariates " << data.p() << " (including intercept if specified).\n\n"
     << "Using the " << family.name() << " spatial correlation model.\n\n"
     << "Number of MCMC samples " << options.n_samples << ".\n\n"
     << "Priors and hyperpriors:\n"
     << "\tbeta normal:\n\tm_0:\t";
  auto fixed3 = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  for (Index i = 0; i < priors.m0.size(); ++i) os << fixed3(priors.m0[i]) << "\t";
  os << "\n\tSigma_0:\n";
  for (Index i = 0; i < priors.sigma0.rows(); ++i) {
    os << "\t";
    for (Index j = 0; j < priors.sigma0.cols(); ++j) os << fixed3(priors.sigma0(i, j)) << "\t";
    os << "\n";
  }
  os << "\n";
  for (Index t = 0; t < data.steps(); ++t) {
    const auto i = static_cast<std::size_t>(t);
    const std::string suffix = "_t=" + std::to_string(t + 1);
    os << "\t" << priors.sigma_sq[i].describe("sigma.sq" + suffix) << "\n"
       << "\t" << priors.tau_sq[i].describe("tau.sq" + suffix) << "\n"
       << "\t" << priors.phi[i].describe("phi" + suffix) << "\n"
       << "\t---\n";
  }
}

}  // namespace

DynamicSamples fit_dynamic(const DynamicDataset& data, const CovFamily& family, const DynamicPriors& priors,
                           const DynamicStart& start, const DynamicOptions& options,
                           const ProgressReporter* progress) {
  const Index n = data.n();
  const Index steps = data.steps();
  const Index p = data.p();
  priors.validate(p, steps);
  require(options.n_samples >= 1, ErrorKind::InvalidParam, "n.samples must be >= 1");
  require(options.report_interval >= 1, ErrorKind::InvalidParam, "n.report must be >= 1");
  require(family.has_nu() == options.nu.has_value(), ErrorKind::InvalidParam,
          "nu must be given exactly for the matern family");
  require(start.beta.size() == p && start.sigma_eta.rows() == p && start.sigma_eta.cols() == p,
          ErrorKind::DimensionMismatch, "starting beta / sigma.eta dimension != p");
  require(start.sigma_sq.size() == steps && start.tau_sq.size() == steps && start.phi.size() == steps,
          ErrorKind::DimensionMismatch, "one starting sigma.sq, tau.sq and phi per time step is required");
  require(options.phi_tuning_sd.size() == steps, ErrorKind::DimensionMismatch,
          "one phi tuning value per time step is required");
  for (Index t = 0; t < steps; ++t) {
    const auto i = static_cast<std::size_t>(t);
    require(priors.phi[i].in_support(start.phi[t]), ErrorKind::OutOfSupport,
            "starting phi outside its prior support at time step " + std::to_string(t + 1));
    require(start.sigma_sq[t] > 0.0 && start.tau_sq[t] > 0.0, ErrorKind::OutOfSupport,
            "starting variances must be positive");
  }

  if (progress) {
    print_dynamic_banner(*progress, data, family, priors, options);
    progress->heading("Sampling");
  }

  const Matrix distances = pairwise_distances(data.coords, data.coords);
  DynamicState s;
  s.beta0 = start.beta;
  s.beta = start.beta.replicate(1, steps);
  s.u = Matrix::Zero(n, steps);
  s.sigma_eta = start.sigma_eta;
  s.sigma_sq = start.sigma_sq;
  s.tau_sq = start.tau_sq;
  s.phi = start.phi;
  s.y = data.y;
  for (Index t = 0; t < steps; ++t)
    for (Index i = 0; i < n; ++i)
      if (data.missing(i, t)) s.y(i, t) = data.x[static_cast<std::size_t>(t)].row(i).dot(s.beta.col(t));

  std::vector<CholFactor<double>> r_chol(static_cast<std::size_t>(steps));
  for (Index t = 0; t < steps; ++t)
    r_chol[static_cast<std::size_t>(t)] = correlation_chol(distances, family, s.phi[t], options.nu);

  DynamicSamples out;
  out.steps = steps;
  out.p = p;
  const Index m = options.n_samples;
  out.beta0.resize(m, p);
  out.beta.resize(m, p * steps);
  out.theta.resize(m, 3 * steps);
  out.sigma_eta.resize(m, p * p);
  for (Index t = 0; t < steps; ++t)
    for (Index i = 0; i < n; ++i)
      if (data.missing(i, t)) out.missing_cells.emplace_back(i, t);
  out.y_missing.resize(m, static_cast<Index>(out.missing_cells.size()));
  if (options.keep_u) out.u.resize(m, n * steps);

  const std::optional<Index> level_column =
      options.shift_move ? intercept_column(data) : std::optional<Index>{};

  Vector accepted = Vector::Zero(steps);
  Vector interval_accepted = Vector::Zero(steps);
  Index interval_iters = 0;
  RandomStream rng(options.seed);

  for (Index it = 0; it < m; ++it) {
    Index t_ctx = 0;
    try {
      impute_missing(data, s, rng);

      for (Index t = 1; t <= steps; ++t) {
        t_ctx = t;
        s.beta.col(t - 1) = beta_conditional_dynamic(data, s, priors, t).draw(rng.normals(p));
      }
      t_ctx = 0;
      s.beta0 = beta_conditional_dynamic(data, s, priors, 0).draw(rng.normals(p));

      for (Index t = 1; t <= steps; ++t) {
        t_ctx = t;
        s.u.col(t - 1) = u_conditional_dynamic(data, s, t, r_chol).draw(rng.normals(n));
      }
      t_ctx = 0;
      if (level_column)
        apply_level_shift(s, *level_column,
                          level_shift_conditional(s, priors, *level_column, r_chol).draw(rng.normals(steps + 1)));

      const InverseWishart post = sigma_eta_posterior(s, priors);
      s.sigma_eta = draw_inverse_wishart(post.df, post.scale, rng);

      for (Index t = 1; t <= steps; ++t) {
        t_ctx = t;
        const auto ti = static_cast<std::size_t>(t - 1);
        const auto [sa, sb] = sigma_sq_posterior(s, priors, t, r_chol[ti]);
        s.sigma_sq[t - 1] = rng.inverse_gamma(sa, sb);
        const auto [ta, tb] = tau_sq_posterior(data, s, priors, t);
        s.tau_sq[t - 1] = rng.inverse_gamma(ta, tb);
      }

      for (Index t = 1; t <= steps; ++t) {
        t_ctx = t;
        const auto ti = static_cast<std::size_t>(t - 1);
        const ScalarPrior& pr = priors.phi[ti];
        const Vector w = s.u.col(t - 1) - previous_u(s, t);
        const double z = pr.to_unconstrained(s.phi[t - 1]);
        const double current =
            latent_log_density(w, s.sigma_sq[t - 1], r_chol[ti]) + pr.log_density(s.phi[t - 1]) + pr.log_jacobian(z);
        const double z_new = z + options.phi_tuning_sd[t - 1] * rng.normal();
        const double phi_new = pr.from_unconstrained(z_new);
        const double log_u = std::log(rng.uniform());
        CholFactor<double> cand;
        try {
          cand = correlation_chol(distances, family, phi_new, options.nu);
        } catch (const Error&) {
          continue;  // numerically infeasible proposal counts as a rejection
        }
        const double proposed =
            latent_log_density(w, s.sigma_sq[t - 1], cand) + pr.log_density(phi_new) + pr.log_jacobian(z_new);
        if (log_u < proposed - current) {
          s.phi[t - 1] = phi_new;
          r_chol[ti] = std::move(cand);
          accepted[t - 1] += 1.0;
          interval_accepted[t - 1] += 1.0;
        }
      }
    } catch (const Error& e) {
      std::string ctx = "iteration " + std::to_string(it + 1);
      if (t_ctx > 0) ctx += ", time step " + std::to_string(t_ctx);
      rethrow_with_context(e, ctx);
    }

    out.beta0.row(it) = s.beta0.transpose();
    out.beta.row(it) = s.beta.reshaped().transpose();
    out.theta.row(it) << s.sigma_sq.transpose(), s.tau_sq.transpose(), s.phi.transpose();
    out.sigma_eta.row(it) = s.sigma_eta.reshaped().transpose();
    for (std::size_t c = 0; c < out.missing_cells.size(); ++c) {
      const auto [i, t] = out.missing_cells[c];
      out.y_missing(it, static_cast<Index>(c)) = s.y(i, t);
    }
    if (options.keep_u) out.u.row(it) = s.u.reshaped().transpose();

    ++interval_iters;
    if ((it + 1) % options.report_interval == 0 || it + 1 == m) {
      const double interval_rate = interval_accepted.mean() / static_cast<double>(interval_iters);
      const double overall_rate = accepted.mean() / static_cast<double>(it + 1);
      out.interval_rates.push_back(interval_rate);
      if (progress) {
        progress->sampled(static_cast<long>(it + 1), static_cast<long>(m));
        progress->acceptance(interval_rate, overall_rate, true);
        progress->separator();
      }
      interval_accepted.setZero();
      interval_iters = 0;
    }
  }
  out.phi_acceptance = accepted / static_cast<double>(m);
  return out;
}

}  // namespace geomc
