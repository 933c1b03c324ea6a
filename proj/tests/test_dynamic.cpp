#include <catch_amalgamated.hpp>

#include <limits>

#include "geomc/dynamic.hpp"
#include "geomc/synthetic.hpp"
#include "oracle.hpp"

using namespace geomc;
using Catch::Matchers::WithinAbs;

namespace {

const CovFamily kExp = CovFamily::from_name("exponential");
const double kNaN = std::numeric_limits<double>::quiet_NaN();

DynamicDataset random_dynamic(Index n, Index steps, Index p, RandomStream& rng) {
  std::vector<Matrix> x;
  for (Index t = 0; t < steps; ++t) {
    Matrix xt = oracle::random_matrix(n, p, rng);
    xt.col(0).setOnes();
    x.push_back(xt);
  }
  return DynamicDataset::make(oracle::random_coords(n, rng), oracle::random_matrix(n, steps, rng), x);
}

DynamicPriors default_priors(Index p, Index steps) {
  DynamicPriors pr;
  pr.m0 = Vector::Zero(p);
  pr.sigma0 = 1e5 * Matrix::Identity(p, p);
  pr.sigma_eta = {2.0, 0.001 * Matrix::Identity(p, p)};
  pr.sigma_sq.assign(static_cast<std::size_t>(steps), ScalarPrior::inverse_gamma(2, 0.001));
  pr.tau_sq.assign(static_cast<std::size_t>(steps), ScalarPrior::inverse_gamma(2, 0.0001));
  pr.phi.assign(static_cast<std::size_t>(steps), ScalarPrior::uniform(3, 30));
  return pr;
}

DynamicState random_state(const DynamicDataset& d, RandomStream& rng) {
  const Index p = d.p(), n = d.n(), steps = d.steps();
  DynamicState s;
  s.beta0 = rng.normals(p);
  s.beta = oracle::random_matrix(p, steps, rng);
  s.u = oracle::random_matrix(n, steps, rng);
  s.sigma_eta = oracle::random_spd(p, rng);
  s.sigma_sq.resize(steps);
  s.tau_sq.resize(steps);
  s.phi.resize(steps);
  for (Index t = 0; t < steps; ++t) {
    s.sigma_sq[t] = 0.5 + 2 * rng.uniform();
    s.tau_sq[t] = 0.2 + 2 * rng.uniform();
    s.phi[t] = 5 + 6 * rng.uniform();
  }
  s.y = d.y;
  return s;
}

std::vector<CholFactor<double>> correlation_factors(const DynamicDataset& d, const DynamicState& s) {
  std::vector<CholFactor<double>> out;
  for (Index t = 0; t < d.steps(); ++t) {
    ProcessParams q;
    q.sigma_sq = 1;
    q.phi = s.phi[t];
    out.push_back(chol(cov_matrix(d.coords, kExp, q, false)));
  }
  return out;
}

// Joint Gaussian over z = (beta_0, beta_1..T, u_1..T) given everything else,
// assembled term by term from the model: log p = -1/2 z'Qz + b'z + const.
struct JointOracle {
  Index p, n, steps;
  Matrix q;
  Vector b;

  Index beta_at(Index t) const { return t * p; }
  Index u_at(Index t) const { return (steps + 1) * p + (t - 1) * n; }
  Index size() const { return (steps + 1) * p + steps * n; }

  // (A z - m) ~ N(0, P^{-1})
  void add(const Matrix& a, const Matrix& prec, const Vector& m) {
    q += a.transpose() * prec * a;
    b += a.transpose() * prec * m;
  }

  JointOracle(const DynamicDataset& d, const DynamicState& s, const DynamicPriors& pr)
      : p(d.p()), n(d.n()), steps(d.steps()) {
    q = Matrix::Zero(size(), size());
    b = Vector::Zero(size());
    Matrix a = Matrix::Zero(p, size());
    a.block(0, 0, p, p).setIdentity();
    add(a, oracle::inverse(pr.sigma0), pr.m0);
    const Matrix eta_inv = oracle::inverse(s.sigma_eta);
    for (Index t = 1; t <= steps; ++t) {
      a.setZero();
      a.block(0, beta_at(t), p, p).setIdentity();
      a.block(0, beta_at(t - 1), p, p) = -Matrix::Identity(p, p);
      add(a, eta_inv, Vector::Zero(p));

      ProcessParams cp;
      cp.sigma_sq = s.sigma_sq[t - 1];
      cp.phi = s.phi[t - 1];
      Matrix au = Matrix::Zero(n, size());
      au.block(0, u_at(t), n, n).setIdentity();
      if (t > 1) au.block(0, u_at(t - 1), n, n) = -Matrix::Identity(n, n);
      add(au, oracle::inverse(oracle::cov_loop(d.coords, d.coords, kExp, cp)), Vector::Zero(n));

      Matrix ay = Matrix::Zero(n, size());
      ay.block(0, beta_at(t), n, p) = d.x[static_cast<std::size_t>(t - 1)];
      ay.block(0, u_at(t), n, n).setIdentity();
      add(ay, Matrix::Identity(n, n) / s.tau_sq[t - 1], s.y.col(t - 1));
    }
  }

  Vector state_vector(const DynamicState& s) const {
    Vector z(size());
    z.segment(0, p) = s.beta0;
    for (Index t = 1; t <= steps; ++t) {
      z.segment(beta_at(t), p) = s.beta.col(t - 1);
      z.segment(u_at(t), n) = s.u.col(t - 1);
    }
    return z;
  }

  // Mean and precision of block [start, start + len) given the rest of z.
  std::pair<Vector, Matrix> conditional(const DynamicState& s, Index start, Index len) const {
    Vector z = state_vector(s);
    z.segment(start, len).setZero();
    const Matrix qbb = q.block(start, start, len, len);
    const Vector rhs = b.segment(start, len) - q.middleRows(start, len) * z;
    return {oracle::inverse(qbb) * rhs, qbb};
  }
};

Matrix precision_of(const PrecisionForm& f) { return f.l.lower() * f.l.lower().transpose(); }

}  // namespace

TEST_CASE("beta_t and beta_0 conditionals match the dense joint oracle") {
  RandomStream rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    const Index n = 2 + rep % 3, steps = 1 + rep % 3, p = 1 + rep % 2;
    const DynamicDataset d = random_dynamic(n, steps, p, rng);
    DynamicPriors pr = default_priors(p, steps);
    pr.sigma0 = oracle::random_spd(p, rng);
    pr.m0 = rng.normals(p);
    const DynamicState s = random_state(d, rng);
    const JointOracle o(d, s, pr);
    for (Index t = 0; t <= steps; ++t) {
      const PrecisionForm f = beta_conditional_dynamic(d, s, pr, t);
      const auto [mean, prec] = o.conditional(s, o.beta_at(t), p);
      CHECK(oracle::rel_err(f.mean(), mean) < 1e-8);
      CHECK(oracle::rel_err(precision_of(f), prec) < 1e-8);
    }
  }
}

TEST_CASE("u_t conditionals match the dense joint oracle with u_0 = 0") {
  RandomStream rng(2);
  for (int rep = 0; rep < 30; ++rep) {
    const Index n = 2 + rep % 3, steps = 1 + rep % 3, p = 1 + rep % 2;
    const DynamicDataset d = random_dynamic(n, steps, p, rng);
    const DynamicPriors pr = default_priors(p, steps);
    const DynamicState s = random_state(d, rng);
    const JointOracle o(d, s, pr);
    const auto r = correlation_factors(d, s);
    for (Index t = 1; t <= steps; ++t) {
      const PrecisionForm f = u_conditional_dynamic(d, s, t, r);
      const auto [mean, prec] = o.conditional(s, o.u_at(t), n);
      CHECK(oracle::rel_err(f.mean(), mean) < 1e-8);
      CHECK(oracle::rel_err(precision_of(f), prec) < 1e-8);
    }
  }
}

TEST_CASE("level shift law matches the joint oracle restricted to the shift directions") {
  RandomStream rng(9);
  for (int rep = 0; rep < 30; ++rep) {
    const Index n = 2 + rep % 3, steps = 1 + rep % 3, p = 1 + rep % 2;
    const DynamicDataset d = random_dynamic(n, steps, p, rng);
    DynamicPriors pr = default_priors(p, steps);
    pr.sigma0 = oracle::random_spd(p, rng);
    pr.m0 = rng.normals(p);
    const DynamicState s = random_state(d, rng);
    const JointOracle o(d, s, pr);
    REQUIRE(intercept_column(d) == Index{0});

    // z + V delta moves the intercept path up and each u_t down by delta_t.
    Matrix v = Matrix::Zero(o.size(), steps + 1);
    v(o.beta_at(0), 0) = 1;
    for (Index t = 1; t <= steps; ++t) {
      v(o.beta_at(t), t) = 1;
      v.col(t).segment(o.u_at(t), n).setConstant(-1);
    }
    const Vector z = o.state_vector(s);
    const Matrix prec = v.transpose() * o.q * v;
    const Vector mean = oracle::inverse(prec) * (v.transpose() * (o.b - o.q * z));

    const PrecisionForm f = level_shift_conditional(s, pr, 0, correlation_factors(d, s));
    CHECK(oracle::rel_err(precision_of(f), prec) < 1e-8);
    CHECK(oracle::rel_err(f.mean(), mean) < 1e-8);

    const Vector delta = rng.normals(steps + 1);
    DynamicState moved = s;
    apply_level_shift(moved, 0, delta);
    CHECK(oracle::rel_err(o.state_vector(moved), z + v * delta) < 1e-14);
    for (Index t = 0; t < steps; ++t) {
      const Vector fit_before = d.x[static_cast<std::size_t>(t)] * s.beta.col(t) + s.u.col(t);
      const Vector fit_after = d.x[static_cast<std::size_t>(t)] * moved.beta.col(t) + moved.u.col(t);
      CHECK(oracle::rel_err(fit_after, fit_before) < 1e-12);
    }
  }
}

TEST_CASE("no level shift without an all-ones column") {
  RandomStream rng(10);
  DynamicDataset d = random_dynamic(4, 3, 2, rng);
  for (auto& x : d.x) x(2, 0) = 0.5;
  CHECK_FALSE(intercept_column(d).has_value());
}

TEST_CASE("variance posteriors are the conjugate inverse-gamma updates") {
  RandomStream rng(3);
  const DynamicDataset d = random_dynamic(4, 3, 2, rng);
  const DynamicPriors pr = default_priors(2, 3);
  const DynamicState s = random_state(d, rng);
  const auto r = correlation_factors(d, s);
  for (Index t = 1; t <= 3; ++t) {
    ProcessParams cp;
    cp.sigma_sq = 1;
    cp.phi = s.phi[t - 1];
    const Matrix ri = oracle::inverse(oracle::cov_loop(d.coords, d.coords, kExp, cp));
    const Vector w = s.u.col(t - 1) - (t == 1 ? Vector::Zero(4) : Vector(s.u.col(t - 2)));
    const auto [sa, sb] = sigma_sq_posterior(s, pr, t, r[static_cast<std::size_t>(t - 1)]);
    CHECK_THAT(sa, WithinAbs(2 + 2.0, 1e-14));
    CHECK_THAT(sb, WithinAbs(0.001 + 0.5 * w.dot(ri * w), 1e-10));
    const Vector e = d.y.col(t - 1) - d.x[static_cast<std::size_t>(t - 1)] * s.beta.col(t - 1) - s.u.col(t - 1);
    const auto [ta, tb] = tau_sq_posterior(d, s, pr, t);
    CHECK_THAT(ta, WithinAbs(4.0, 1e-14));
    CHECK_THAT(tb, WithinAbs(0.0001 + 0.5 * e.squaredNorm(), 1e-12));
  }
}

TEST_CASE("Sigma_eta posterior: df + T and scale plus the innovation outer products") {
  RandomStream rng(4);
  const DynamicDataset d = random_dynamic(3, 3, 2, rng);
  const DynamicPriors pr = default_priors(2, 3);
  const DynamicState s = random_state(d, rng);
  const InverseWishart post = sigma_eta_posterior(s, pr);
  CHECK(post.df == 5.0);
  Matrix want = pr.sigma_eta.scale;
  Vector prev = s.beta0;
  for (Index t = 0; t < 3; ++t) {
    const Vector e = s.beta.col(t) - prev;
    want += e * e.transpose();
    prev = s.beta.col(t);
  }
  CHECK(oracle::rel_err(post.scale, want) < 1e-14);
}

TEST_CASE("Bartlett inverse-Wishart draws have the right mean") {
  RandomStream rng(5);
  Matrix scale(2, 2);
  scale << 2.0, 0.3, 0.3, 1.0;
  const double df = 8.0;
  const int m = 200000;
  Matrix sum = Matrix::Zero(2, 2);
  for (int i = 0; i < m; ++i) {
    const Matrix w = draw_inverse_wishart(df, scale, rng);
    CHECK_NOTHROW(chol(w));
    sum += w;
  }
  const Matrix mean = sum / m;
  const Matrix want = scale / (df - 2 - 1);
  INFO("mean\n" << mean << "\nwant\n" << want);
  CHECK((mean - want).cwiseAbs().maxCoeff() < 0.01);
  CHECK_THROWS_AS(draw_inverse_wishart(0.5, scale, rng), Error);
}

TEST_CASE("imputation draws from the observation model and leaves data alone") {
  RandomStream rng(6);
  DynamicDataset d = random_dynamic(4, 2, 1, rng);
  d.y(1, 0) = kNaN;
  d = DynamicDataset::make(d.coords, d.y, d.x);
  REQUIRE(d.missing_count() == 1);
  DynamicState s = random_state(d, rng);
  s.y(1, 0) = 0;
  const double mu = d.x[0].row(1).dot(s.beta.col(0)) + s.u(1, 0);

  SECTION("vanishing nugget reproduces the mean") {
    s.tau_sq[0] = 1e-20;
    impute_missing(d, s, rng);
    CHECK_THAT(s.y(1, 0), WithinAbs(mu, 1e-8));
  }
  SECTION("variance tau^2 and untouched observed cells") {
    s.tau_sq[0] = 0.7;
    double sum = 0, sq = 0;
    const int m = 100000;
    for (int i = 0; i < m; ++i) {
      impute_missing(d, s, rng);
      sum += s.y(1, 0);
      sq += s.y(1, 0) * s.y(1, 0);
    }
    const double mean = sum / m;
    const double var = sq / m - mean * mean;
    CHECK(std::abs(mean - mu) < 4 * std::sqrt(0.7 / m));
    CHECK(std::abs(var - 0.7) < 3 * 0.7 * std::sqrt(2.0 / m));
    Matrix observed = s.y, original = d.y;
    observed(1, 0) = original(1, 0) = 0;
    CHECK(observed == original);
  }
}

TEST_CASE("imputation is a no-op without missing cells") {
  RandomStream rng(7);
  const DynamicDataset d = random_dynamic(3, 2, 1, rng);
  DynamicState s = random_state(d, rng);
  const Matrix before = s.y;
  impute_missing(d, s, rng);
  CHECK(s.y == before);
}

TEST_CASE("dataset validation") {
  RandomStream rng(8);
  DynamicDataset d = random_dynamic(3, 2, 1, rng);
  Matrix y = d.y;
  y.col(1).setConstant(kNaN);
  CHECK_THROWS_MATCHES(DynamicDataset::make(d.coords, y, d.x), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == ErrorKind::AllMissingStep;
                       }));
  std::vector<Matrix> short_x = {d.x[0]};
  CHECK_THROWS_AS(DynamicDataset::make(d.coords, d.y, short_x), Error);
}

namespace {

struct SmallRun {
  DynamicDataset data;
  DynamicPriors priors;
  DynamicStart start;
  DynamicOptions options;
};

SmallRun small_run() {
  RandomStream rng(9);
  Vector beta0(2);
  beta0 << 1.0, 0.5;
  ProcessParams theta;
  theta.sigma_sq = 0.2;
  theta.tau_sq = 0.05;
  theta.phi = 6;
  const SyntheticDynamic sim =
      simulate_dynamic(8, 4, beta0, 0.01 * Matrix::Identity(2, 2), kExp, theta, 1.0, rng);
  Matrix y = sim.y;
  y(2, 1) = kNaN;
  y(5, 3) = kNaN;
  SmallRun r{DynamicDataset::make(sim.coords, y, sim.x), default_priors(2, 4), {}, {}};
  r.start.beta = Vector::Zero(2);
  r.start.sigma_eta = 0.01 * Matrix::Identity(2, 2);
  r.start.sigma_sq = Vector::Constant(4, 0.1);
  r.start.tau_sq = Vector::Constant(4, 0.1);
  r.start.phi = Vector::Constant(4, 6.0);
  r.options.n_samples = 200;
  r.options.report_interval = 100;
  r.options.seed = 3;
  r.options.phi_tuning_sd = Vector::Constant(4, std::sqrt(2.0));
  return r;
}

}  // namespace

TEST_CASE("fit_dynamic shapes, determinism and banner") {
  SmallRun r = small_run();
  r.options.keep_u = true;
  std::ostringstream log;
  const ProgressReporter rep(&log);
  const DynamicSamples a = fit_dynamic(r.data, kExp, r.priors, r.start, r.options, &rep);
  CHECK(a.beta0.rows() == 200);
  CHECK(a.beta.cols() == 8);
  CHECK(a.theta.cols() == 12);
  CHECK(a.sigma_eta.cols() == 4);
  CHECK(a.y_missing.cols() == 2);
  CHECK(a.u.cols() == 32);
  REQUIRE(a.missing_cells.size() == 2);
  CHECK(a.missing_cells[0] == std::pair<Index, Index>(2, 1));
  CHECK(a.missing_cells[1] == std::pair<Index, Index>(5, 3));
  CHECK(a.interval_rates.size() == 2);
  CHECK(a.mean_acceptance() >= 0.0);
  CHECK(a.mean_acceptance() <= 1.0);
  CHECK((a.theta.leftCols(8).array() > 0).all());
  CHECK((a.theta.rightCols(4).array() >= 3).all());
  CHECK((a.theta.rightCols(4).array() <= 30).all());
  CHECK(log.str().find("Number of missing observations 2.") != std::string::npos);

  const DynamicSamples b = fit_dynamic(r.data, kExp, r.priors, r.start, r.options);
  CHECK(a.beta == b.beta);
  CHECK(a.theta == b.theta);
  CHECK(a.y_missing == b.y_missing);
  r.options.seed = 4;
  CHECK(fit_dynamic(r.data, kExp, r.priors, r.start, r.options).beta != a.beta);
}

TEST_CASE("fit_dynamic rejects inconsistent inputs") {
  SmallRun r = small_run();
  SECTION("phi start outside the prior") {
    r.start.phi[1] = 50;
    CHECK_THROWS_AS(fit_dynamic(r.data, kExp, r.priors, r.start, r.options), Error);
  }
  SECTION("tuning length") {
    r.options.phi_tuning_sd = Vector::Constant(3, 1.0);
    CHECK_THROWS_AS(fit_dynamic(r.data, kExp, r.priors, r.start, r.options), Error);
  }
  SECTION("IW df") {
    r.priors.sigma_eta.df = 0.0;
    CHECK_THROWS_AS(fit_dynamic(r.data, kExp, r.priors, r.start, r.options), Error);
  }
}
