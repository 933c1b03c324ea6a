#include "geomc/cli.hpp"

#include <chrono>
#include <sstream>

#include "CLI11.hpp"
#include "geomc/config.hpp"
#include "geomc/full_rank.hpp"
#include "geomc/synthetic.hpp"

namespace geomc {

namespace fs = std::filesystem;

namespace {

enum class Stage { Config, Data, Compute };

int exit_code(Stage stage, ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::OutOfSupport:
    case ErrorKind::TooManyKnots:
      return kExitConfig;
    case ErrorKind::ParseError:
    case ErrorKind::MissingNotAllowed:
    case ErrorKind::AllMissingStep:
    case ErrorKind::RankDeficientX:
      return kExitData;
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::SingularTriangular:
      return kExitNumerical;
    default:
      break;
  }
  switch (stage) {
    case Stage::Config:
      return kExitConfig;
    case Stage::Data:
      return kExitData;
    case Stage::Compute:
      return kExitNumerical;
  }
  return kExitNumerical;
}

std::vector<std::string> numbered(const std::string& prefix, Index n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> beta_names(const SpatialColumns& cols) {
  std::vector<std::string> out;
  if (cols.intercept) out.push_back("(Intercept)");
  for (const auto& c : cols.covariates) out.push_back(c);
  return out;
}

ThetaChain chain_from_table(const CsvTable& t) {
  ThetaChain c;
  c.names = t.header;
  c.samples = t.values;
  return c;
}

Coords coords_of(const Matrix& m) {
  require(m.cols() >= 2, ErrorKind::ParseError, "expected two coordinate columns");
  Coords c(m.rows(), 2);
  c.col(0) = m.col(0);
  c.col(1) = m.col(1);
  return c;
}

class Runner {
 public:
  Runner(const CliOptions& opts, std::ostream& out) : opts_(opts), out_(out) {}

  Stage stage() const { return stage_; }

  void execute() {
    const auto t0 = std::chrono::steady_clock::now();
    cfg_ = ConfigFile::load(opts_.config);
    fs::path dir = opts_.out ? *opts_.out
                             : (cfg_.has("run", "out") ? cfg_.path("run", "out") : fs::path("geomc-out"));
    store_.emplace(dir);
    progress_ = ProgressReporter(opts_.quiet ? nullptr : &out_);

    const std::string& cmd = opts_.command;
    if (cmd == "fit-full")
      fit_full();
    else if (cmd == "fit-pp")
      fit_pp();
    else if (cmd == "recover")
      recover();
    else if (cmd == "predict")
      predict();
    else if (cmd == "fit-dynamic")
      fit_dynamic_cmd();
    else if (cmd == "simulate")
      simulate();
    else
      fail(ErrorKind::ConfigError, "unknown command '" + cmd + "'");

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string hash_input = cmd + "\n" + std::to_string(seed_) + "\n" + cfg_.text();
    store_->write_manifest(cmd, fnv1a64(hash_input), seed_, wall);
  }

 private:
  SpatialDataset load_data() {
    stage_ = Stage::Data;
    SpatialDataset d = load_spatial(cfg_.path("data", "file"), cols_);
    stage_ = Stage::Config;
    return d;
  }

  void common_spatial() {
    cols_ = spatial_columns(cfg_);
    family_ = cov_family(cfg_);
    spec_ = theta_spec(cfg_, family_);
    options_ = sampler_options(cfg_, opts_.seed);
    seed_ = options_.seed;
  }

  void fit_full() {
    common_spatial();
    const SpatialDataset data = load_data();
    const BetaPrior prior = beta_prior(cfg_, data.p());
    stage_ = Stage::Compute;
    const ThetaChain chain = fit_full_rank(data, family_, spec_, prior, options_, &progress_);
    store_->put("theta", chain.names, chain.samples);
    store_->set_acceptance("theta", chain.acceptance_rate());
    store_->set_info("model", "full-rank");
  }

  void fit_pp() {
    common_spatial();
    const auto knots = knot_spec(cfg_);
    require(knots.has_value(), ErrorKind::ConfigError, "fit-pp needs [model] knots or knots.file");
    const PPParametrization param = pp_parametrization(cfg_);
    const SpatialDataset data = load_data();
    const BetaPrior prior = beta_prior(cfg_, data.p());
    stage_ = Stage::Compute;
    const LowRankFit fit = fit_lowrank(data, family_, *knots, spec_, prior, options_, &progress_, param);
    store_->put("theta", fit.theta.names, fit.theta.samples);
    store_->put("beta", beta_names(cols_), fit.beta);
    store_->put("knots", {"knot.x", "knot.y"}, fit.knots);
    store_->set_acceptance("theta", fit.theta.acceptance_rate());
    store_->set_info("model", fit.modified ? "modified-pp" : "non-modified-pp");
    store_->set_info("knots", std::to_string(fit.knots.rows()));
  }

  void recover() {
    cols_ = spatial_columns(cfg_);
    family_ = cov_family(cfg_);
    seed_ = opts_.seed ? *opts_.seed : static_cast<std::uint64_t>(cfg_.integer("recover", "seed", 1));
    const RecoverOptions ropts = recover_options(cfg_, seed_);
    const SampleStore fit_store(cfg_.path("recover", "fit"));
    const SpatialDataset data = load_data();

    stage_ = Stage::Data;
    const ThetaChain chain = chain_from_table(fit_store.get("theta"));
    const bool low_rank = fit_store.has("knots");
    RecoveredSamples rec;
    if (low_rank) {
      LowRankFit fit;
      fit.theta = chain;
      fit.beta = fit_store.get("beta").values;
      fit.knots = coords_of(fit_store.get("knots").values);
      const auto ks = knot_spec(cfg_);
      stage_ = Stage::Config;
      require(ks.has_value(), ErrorKind::ConfigError, "fit has knots but the config has no [model] knots");
      fit.modified = ks->modified;
      fit.parametrization = pp_parametrization(cfg_);
      stage_ = Stage::Compute;
      rec = recover_lowrank(fit, data, family_, ropts, &progress_);
      store_->put("alpha", numbered("alpha.", rec.alpha.cols()), rec.alpha);
      store_->put("w.star", numbered("w.star.", rec.w_star.cols()), rec.w_star);
      store_->put("knots", {"knot.x", "knot.y"}, fit.knots);
    } else {
      stage_ = Stage::Config;
      const BetaPrior prior = beta_prior(cfg_, data.p());
      stage_ = Stage::Compute;
      rec = recover_full_rank(chain, data, family_, prior, ropts, &progress_);
    }
    store_->put("theta", rec.theta_names, rec.theta_subset);
    store_->put("beta", beta_names(cols_), rec.beta);
    if (rec.w.size() > 0) store_->put("w", numbered("w.", rec.w.cols()), rec.w);
    store_->set_info("retained", std::to_string(rec.size()));
  }

  void predict() {
    cols_ = spatial_columns(cfg_);
    family_ = cov_family(cfg_);
    seed_ = opts_.seed ? *opts_.seed : static_cast<std::uint64_t>(cfg_.integer("predict", "seed", 1));
    PredictionRequest req;
    req.seed = seed_;
    const std::string mode = cfg_.get("predict", "mode", "conditional");
    require(mode == "conditional" || mode == "via-alpha", ErrorKind::ConfigError,
            "[predict] mode must be conditional or via-alpha");
    req.mode = mode == "conditional" ? PredictMode::Conditional : PredictMode::ViaAlpha;
    req.joint = cfg_.flag("predict", "joint", false);
    req.latent = cfg_.flag("predict", "latent", false);
    const SampleStore samples(cfg_.path("predict", "samples"));
    const fs::path new_file = cfg_.path("predict", "file");
    const SpatialDataset data = load_data();

    stage_ = Stage::Data;
    const CsvTable newt = read_csv(new_file, false);
    req.coords = coords_from_table(newt, cols_);
    req.x = design_from_table(newt, cols_);
    RecoveredSamples rec;
    const CsvTable theta = samples.get("theta");
    rec.theta_names = theta.header;
    rec.theta_subset = theta.values;
    rec.beta = samples.get("beta").values;
    rec.rows.resize(static_cast<std::size_t>(rec.theta_subset.rows()));
    for (std::size_t i = 0; i < rec.rows.size(); ++i) rec.rows[i] = static_cast<Index>(i);
    require(rec.beta.rows() == rec.theta_subset.rows(), ErrorKind::DimensionMismatch,
            "beta and theta samples have different row counts");
    const bool low_rank = samples.has("knots");
    Matrix y0;
    if (low_rank) {
      const Coords knots = coords_of(samples.get("knots").values);
      if (req.mode == PredictMode::ViaAlpha) rec.alpha = samples.get("alpha").values;
      stage_ = Stage::Config;
      const auto ks = knot_spec(cfg_);
      require(ks.has_value(), ErrorKind::ConfigError, "samples have knots but the config has no [model] knots");
      const PPParametrization param = pp_parametrization(cfg_);
      stage_ = Stage::Compute;
      y0 = predict_lowrank(rec, data, family_, knots, ks->modified, param, req, &progress_);
    } else {
      stage_ = Stage::Config;
      require(req.mode == PredictMode::Conditional, ErrorKind::ConfigError,
              "via-alpha prediction needs a predictive-process fit");
      stage_ = Stage::Compute;
      y0 = predict_full_rank(rec, data, family_, req, &progress_);
    }
    store_->put("y0", numbered("y0.", y0.cols()), y0);
  }

  void fit_dynamic_cmd() {
    family_ = cov_family(cfg_);
    const DynamicConfig dc = dynamic_config(cfg_, family_, opts_.seed);
    seed_ = dc.options.seed;
    stage_ = Stage::Data;
    const DynamicDataset data = load_dynamic(cfg_.path("dynamic", "file"), dc.columns);
    stage_ = Stage::Compute;
    const DynamicSamples s = fit_dynamic(data, family_, dc.priors, dc.start, dc.options, &progress_);
    const Index p = s.p;
    const Index steps = s.steps;
    std::vector<std::string> beta_cols;
    for (Index t = 1; t <= steps; ++t)
      for (Index j = 1; j <= p; ++j) beta_cols.push_back("beta." + std::to_string(j) + ".t" + std::to_string(t));
    std::vector<std::string> theta_cols;
    for (const char* name : {"sigma.sq", "tau.sq", "phi"})
      for (Index t = 1; t <= steps; ++t) theta_cols.push_back(std::string(name) + ".t" + std::to_string(t));
    std::vector<std::string> eta_cols;
    for (Index j = 1; j <= p; ++j)
      for (Index i = 1; i <= p; ++i) eta_cols.push_back("sigma.eta." + std::to_string(i) + "." + std::to_string(j));
    std::vector<std::string> miss_cols;
    for (const auto& [i, t] : s.missing_cells)
      miss_cols.push_back("y.s" + std::to_string(i + 1) + ".t" + std::to_string(t + 1));
    store_->put("beta.0", numbered("beta.0.", p), s.beta0);
    store_->put("beta", beta_cols, s.beta);
    store_->put("theta", theta_cols, s.theta);
    store_->put("sigma.eta", eta_cols, s.sigma_eta);
    store_->put("y.missing", miss_cols, s.y_missing);
    if (s.u.size() > 0) {
      std::vector<std::string> u_cols;
      for (Index t = 1; t <= steps; ++t)
        for (Index i = 1; i <= data.n(); ++i) u_cols.push_back("u.s" + std::to_string(i) + ".t" + std::to_string(t));
      store_->put("u", u_cols, s.u);
    }
    store_->set_acceptance("phi.mean", s.mean_acceptance());
    store_->set_info("missing", std::to_string(data.missing_count()));
  }

  void simulate() {
    family_ = cov_family(cfg_);
    const std::string sec = "simulate";
    const Index n = cfg_.integer(sec, "n", 200);
    const Index holdout = cfg_.integer(sec, "holdout", 0);
    require(n >= 2 && holdout >= 0, ErrorKind::ConfigError, "[simulate] n must be >= 2 and holdout >= 0");
    const auto b = cfg_.numbers(sec, "beta");
    const Vector beta = Eigen::Map<const Vector>(b.data(), static_cast<Index>(b.size()));
    ProcessParams theta;
    theta.sigma_sq = cfg_.number(sec, "sigma.sq");
    theta.tau_sq = cfg_.number(sec, "tau.sq");
    theta.phi = cfg_.number(sec, "phi");
    if (family_.has_nu()) theta.nu = cfg_.number(sec, "nu");
    seed_ = opts_.seed ? *opts_.seed : static_cast<std::uint64_t>(cfg_.integer(sec, "seed", 1));
    try {
      validate_params(family_, theta);
    } catch (const Error& e) {
      fail(ErrorKind::ConfigError, e.what());
    }
    stage_ = Stage::Compute;
    RandomStream rng(seed_);
    const SyntheticSpatial s = simulate_spatial(n + holdout, beta, family_, theta, rng);
    std::vector<std::string> header{"s.x", "s.y", "y"};
    for (Index j = 1; j < beta.size(); ++j) header.push_back("x" + std::to_string(j));
    header.push_back("w");
    Matrix all(n + holdout, static_cast<Index>(header.size()));
    all.col(0) = s.coords.col(0);
    all.col(1) = s.coords.col(1);
    all.col(2) = s.y;
    for (Index j = 1; j < beta.size(); ++j) all.col(2 + j) = s.x.col(j);
    all.col(all.cols() - 1) = s.w;
    store_->put("data", header, all.topRows(n));
    if (holdout > 0) store_->put("holdout", header, all.bottomRows(holdout));
    if (!opts_.quiet)
      out_ << "Simulated " << n << " observations" << (holdout ? " and " + std::to_string(holdout) + " holdouts" : "")
           << " in " << store_->dir().string() << "\n";
  }

  const CliOptions& opts_;
  std::ostream& out_;
  Stage stage_ = Stage::Config;
  ConfigFile cfg_;
  std::optional<SampleStore> store_;
  ProgressReporter progress_;
  SpatialColumns cols_;
  CovFamily family_;
  ThetaSpec spec_;
  SamplerOptions options_;
  std::uint64_t seed_ = 1;
};

}  // namespace

int run(const CliOptions& options, std::ostream& out, std::ostream& err) {
  Runner runner(options, out);
  try {
    runner.execute();
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(runner.stage(), e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return runner.stage() == Stage::Compute ? kExitNumerical
                                            : (runner.stage() == Stage::Data ? kExitData : kExitConfig);
  }
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian geostatistical models fitted by MCMC"};
  app.require_subcommand(1);
  CliOptions opts;
  std::uint64_t seed = 0;
  std::string out_dir;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fit-full", "Fit the full-rank model by marginalized Metropolis"},
      {"fit-pp", "Fit a predictive-process (low-rank) model by Gibbs sampling"},
      {"recover", "Sample beta and spatial effects from a stored fit"},
      {"predict", "Posterior predictive draws at new locations"},
      {"fit-dynamic", "Fit the dynamic spatio-temporal model"},
      {"simulate", "Write a synthetic spatial dataset"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "Config file")->required();
    sub->add_option("--seed", seed, "Random seed (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_flag("--quiet", opts.quiet, "Suppress progress output");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    opts.command = sub->get_name();
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--out")) opts.out = fs::path(out_dir);
  }
  return run(opts, out, err);
}

}  // namespace geomc
