#include "geomc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

namespace geomc {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

// Keys contain dots, so lookups use '/' as the path separator.
pt::ptree::path_type key_path(const std::string& section, const std::string& key) {
  return pt::ptree::path_type(section + "/" + key, '/');
}

std::string strip_comment(const std::string& v) {
  std::string out = v;
  const auto pos = out.find_first_of(";#");
  if (pos != std::string::npos) out.erase(pos);
  const auto b = out.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = out.find_last_not_of(" \t\r");
  return out.substr(b, e - b + 1);
}

std::string qualified(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(ErrorKind::ConfigError, what + ": '" + s + "' is not a number");
  }
  if (used != s.size() || !std::isfinite(v)) fail(ErrorKind::ConfigError, what + ": '" + s + "' is not a number");
  return v;
}

Vector recycle(const std::vector<double>& v, Index n, const std::string& what) {
  require(!v.empty(), ErrorKind::ConfigError, what + " is empty");
  require(v.size() == 1 || static_cast<Index>(v.size()) == n, ErrorKind::ConfigError,
          what + " needs 1 or " + std::to_string(n) + " values, got " + std::to_string(v.size()));
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = v.size() == 1 ? v[0] : v[static_cast<std::size_t>(i)];
  return out;
}

std::pair<double, double> pair_of(const ConfigFile& cfg, const std::string& section, const std::string& key) {
  const auto v = cfg.numbers(section, key);
  require(v.size() == 2, ErrorKind::ConfigError, qualified(section, key) + " needs two values");
  return {v[0], v[1]};
}

ScalarPrior prior_from(const ConfigFile& cfg, const std::string& section, const std::string& name) {
  const bool ig = cfg.has(section, name + ".IG");
  const bool unif = cfg.has(section, name + ".Unif");
  require(ig != unif, ErrorKind::ConfigError,
          "give exactly one of " + name + ".IG or " + name + ".Unif in [" + section + "]");
  if (ig) {
    const auto [a, b] = pair_of(cfg, section, name + ".IG");
    return ScalarPrior::inverse_gamma(a, b);
  }
  const auto [a, b] = pair_of(cfg, section, name + ".Unif");
  return ScalarPrior::uniform(a, b);
}

ThetaComponent component(const ConfigFile& cfg, ThetaName name) {
  const std::string key = to_string(name);
  ThetaComponent c;
  c.name = name;
  c.prior = prior_from(cfg, "priors", key);
  c.start = cfg.number("starting", key);
  const double variance = cfg.number("tuning", key);
  require(variance > 0.0, ErrorKind::ConfigError, qualified("tuning", key) + " must be positive");
  c.tuning_sd = std::sqrt(variance);
  return c;
}

}  // namespace

ConfigFile ConfigFile::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ConfigError, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

ConfigFile ConfigFile::parse(const std::string& text, const fs::path& base_dir) {
  ConfigFile cfg;
  cfg.text_ = text;
  cfg.base_dir_ = base_dir;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, cfg.tree_);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::ConfigError, std::string("config parse error: ") + e.message() + " at line " +
                                     std::to_string(e.line()));
  }
  return cfg;
}

bool ConfigFile::has_section(const std::string& section) const {
  return tree_.get_child_optional(pt::ptree::path_type(section, '/')).has_value();
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto v = tree_.get_optional<std::string>(key_path(section, key));
  return v && !strip_comment(*v).empty();
}

std::string ConfigFile::get(const std::string& section, const std::string& key) const {
  const auto v = tree_.get_optional<std::string>(key_path(section, key));
  require(v.has_value() && !strip_comment(*v).empty(), ErrorKind::ConfigError,
          "missing required key " + qualified(section, key));
  return strip_comment(*v);
}

std::string ConfigFile::get(const std::string& section, const std::string& key, const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double ConfigFile::number(const std::string& section, const std::string& key) const {
  return parse_number(get(section, key), qualified(section, key));
}

double ConfigFile::number(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? number(section, key) : fallback;
}

Index ConfigFile::integer(const std::string& section, const std::string& key, Index fallback) const {
  if (!has(section, key)) return fallback;
  const double v = number(section, key);
  require(v == std::floor(v), ErrorKind::ConfigError, qualified(section, key) + " must be an integer");
  return static_cast<Index>(v);
}

bool ConfigFile::flag(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "true" || v == "TRUE" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "FALSE" || v == "no" || v == "0") return false;
  fail(ErrorKind::ConfigError, qualified(section, key) + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> ConfigFile::strings(const std::string& section, const std::string& key) const {
  std::string v = get(section, key);
  for (char& c : v)
    if (c == ',') c = ' ';
  std::istringstream in(v);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::vector<double> ConfigFile::numbers(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : strings(section, key)) out.push_back(parse_number(s, qualified(section, key)));
  return out;
}

fs::path ConfigFile::path(const std::string& section, const std::string& key) const {
  fs::path p = get(section, key);
  return p.is_absolute() ? p : base_dir_ / p;
}

SpatialColumns spatial_columns(const ConfigFile& cfg, const std::string& section) {
  SpatialColumns c;
  if (cfg.has(section, "coords")) {
    const auto names = cfg.strings(section, "coords");
    require(names.size() == 2, ErrorKind::ConfigError, qualified(section, "coords") + " needs two column names");
    c.coord_x = names[0];
    c.coord_y = names[1];
  } else {
    c.coord_x = "s.x";
    c.coord_y = "s.y";
  }
  c.outcome = cfg.get(section, "y", "y");
  if (cfg.has(section, "covariates")) c.covariates = cfg.strings(section, "covariates");
  c.intercept = cfg.flag(section, "intercept", true);
  return c;
}

CovFamily cov_family(const ConfigFile& cfg) {
  try {
    return CovFamily::from_name(cfg.get("model", "cov.model", "exponential"), cfg.number("model", "power", 1.0));
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, e.what());
  }
}

ThetaSpec theta_spec(const ConfigFile& cfg, const CovFamily& family) {
  std::optional<ThetaComponent> nu;
  if (family.has_nu()) nu = component(cfg, ThetaName::Nu);
  return ThetaSpec::make(family, component(cfg, ThetaName::SigmaSq), component(cfg, ThetaName::TauSq),
                         component(cfg, ThetaName::Phi), nu);
}

BetaPrior beta_prior(const ConfigFile& cfg, Index p) {
  const std::string kind = cfg.get("priors", "beta", "flat");
  if (kind == "flat" || kind == "beta.Flat") return BetaPrior::flat();
  require(kind == "normal" || kind == "beta.Norm", ErrorKind::ConfigError,
          "[priors] beta must be flat or normal, got '" + kind + "'");
  const Vector mu = recycle(cfg.numbers("priors", "beta.mu"), p, "[priors] beta.mu");
  const auto var = cfg.numbers("priors", "beta.var");
  Matrix sigma;
  if (static_cast<Index>(var.size()) == p * p && p > 1) {
    sigma = Eigen::Map<const Matrix>(var.data(), p, p);
  } else {
    sigma = recycle(var, p, "[priors] beta.var").asDiagonal();
  }
  return BetaPrior::normal(mu, sigma);
}

SamplerOptions sampler_options(const ConfigFile& cfg, std::optional<std::uint64_t> seed_override) {
  SamplerOptions o;
  o.n_samples = cfg.integer("sampler", "n.samples", o.n_samples);
  o.report_interval = cfg.integer("sampler", "n.report", std::max<Index>(1, o.n_samples / 2));
  o.adaptive = cfg.flag("sampler", "amcmc", false);
  o.adapt_batch = cfg.integer("sampler", "batch.length", o.adapt_batch);
  o.adapt_target = cfg.number("sampler", "accept.rate", o.adapt_target);
  o.seed = seed_override ? *seed_override : static_cast<std::uint64_t>(cfg.integer("sampler", "seed", 1));
  o.validate();
  return o;
}

std::optional<KnotSpec> knot_spec(const ConfigFile& cfg) {
  const bool modified = cfg.flag("model", "modified.pp", true);
  if (cfg.has("model", "knots.file")) {
    const CsvTable t = read_csv(cfg.path("model", "knots.file"), false);
    require(t.values.cols() >= 2, ErrorKind::ConfigError, "knots file needs two coordinate columns");
    Coords pts(t.values.rows(), 2);
    pts.col(0) = t.values.col(0);
    pts.col(1) = t.values.col(1);
    return KnotSpec::explicit_points(pts, modified);
  }
  if (!cfg.has("model", "knots")) return std::nullopt;
  const auto v = cfg.numbers("model", "knots");
  require(v.size() == 2 || v.size() == 3, ErrorKind::ConfigError, "[model] knots = nx, ny[, extend]");
  require(v[0] >= 1 && v[1] >= 1 && v[0] == std::floor(v[0]) && v[1] == std::floor(v[1]),
          ErrorKind::ConfigError, "[model] knots grid counts must be positive integers");
  return KnotSpec::grid(static_cast<Index>(v[0]), static_cast<Index>(v[1]), v.size() == 3 ? v[2] : 0.0, modified);
}

PPParametrization pp_parametrization(const ConfigFile& cfg) {
  const std::string v = cfg.get("model", "pp.parametrization", "alternative");
  if (v == "alternative") return PPParametrization::Alternative;
  if (v == "standard") return PPParametrization::Standard;
  fail(ErrorKind::ConfigError, "[model] pp.parametrization must be alternative or standard");
}

RecoverOptions recover_options(const ConfigFile& cfg, std::uint64_t seed) {
  RecoverOptions o;
  o.start = cfg.integer("recover", "start", 1);
  o.thin = cfg.integer("recover", "thin", 1);
  o.recover_w = cfg.flag("recover", "w", true);
  const std::string cond = cfg.get("recover", "w.conditioning", "prior-mean");
  if (cond == "prior-mean")
    o.w_conditioning = WConditioning::PriorMean;
  else if (cond == "drawn-beta")
    o.w_conditioning = WConditioning::DrawnBeta;
  else
    fail(ErrorKind::ConfigError, "[recover] w.conditioning must be prior-mean or drawn-beta");
  o.seed = seed;
  return o;
}

DynamicConfig dynamic_config(const ConfigFile& cfg, const CovFamily& family,
                             std::optional<std::uint64_t> seed_override) {
  DynamicConfig d;
  const std::string sec = "dynamic";
  DynamicColumns& c = d.columns;
  if (cfg.has(sec, "coords")) {
    const auto names = cfg.strings(sec, "coords");
    require(names.size() == 2, ErrorKind::ConfigError, "[dynamic] coords needs two column names");
    c.coord_x = names[0];
    c.coord_y = names[1];
  } else {
    c.coord_x = "s.x";
    c.coord_y = "s.y";
  }
  c.outcome_prefix = cfg.get(sec, "y.prefix", "y.");
  if (cfg.has(sec, "covariate.prefixes")) c.covariate_prefixes = cfg.strings(sec, "covariate.prefixes");
  c.intercept = cfg.flag(sec, "intercept", true);
  c.steps = cfg.integer(sec, "steps", 0);
  require(c.steps >= 1, ErrorKind::ConfigError, "[dynamic] steps must be >= 1");
  const Index steps = c.steps;
  const Index p = (c.intercept ? 1 : 0) + static_cast<Index>(c.covariate_prefixes.size());

  const std::string pri = "dynamic.priors";
  DynamicPriors& pr = d.priors;
  pr.m0 = recycle(cfg.numbers(pri, "beta.0.Norm.mean"), p, "[dynamic.priors] beta.0.Norm.mean");
  pr.sigma0 = recycle(cfg.numbers(pri, "beta.0.Norm.var"), p, "[dynamic.priors] beta.0.Norm.var").asDiagonal();
  const auto iw = cfg.numbers(pri, "sigma.eta.IW");
  require(iw.size() == 2, ErrorKind::ConfigError, "[dynamic.priors] sigma.eta.IW = df, diagonal scale");
  pr.sigma_eta.df = iw[0];
  pr.sigma_eta.scale = Matrix::Identity(p, p) * iw[1];
  auto per_step = [&](const std::string& key, bool uniform) {
    const auto v = cfg.numbers(pri, key);
    require(v.size() == 2 || static_cast<Index>(v.size()) == 2 * steps, ErrorKind::ConfigError,
            qualified(pri, key) + " needs 2 or 2*steps values");
    std::vector<ScalarPrior> out;
    for (Index t = 0; t < steps; ++t) {
      const double a = v.size() == 2 ? v[0] : v[static_cast<std::size_t>(t)];
      const double b = v.size() == 2 ? v[1] : v[static_cast<std::size_t>(steps + t)];
      out.push_back(uniform ? ScalarPrior::uniform(a, b) : ScalarPrior::inverse_gamma(a, b));
    }
    return out;
  };
  try {
    pr.sigma_sq = per_step("sigma.sq.IG", false);
    pr.tau_sq = per_step("tau.sq.IG", false);
    pr.phi = per_step("phi.Unif", true);
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, e.what());
  }

  const std::string st = "dynamic.starting";
  d.start.beta = recycle(cfg.numbers(st, "beta"), p, "[dynamic.starting] beta");
  d.start.sigma_eta = recycle(cfg.numbers(st, "sigma.eta"), p, "[dynamic.starting] sigma.eta").asDiagonal();
  d.start.sigma_sq = recycle(cfg.numbers(st, "sigma.sq"), steps, "[dynamic.starting] sigma.sq");
  d.start.tau_sq = recycle(cfg.numbers(st, "tau.sq"), steps, "[dynamic.starting] tau.sq");
  d.start.phi = recycle(cfg.numbers(st, "phi"), steps, "[dynamic.starting] phi");

  DynamicOptions& o = d.options;
  o.n_samples = cfg.integer(sec, "n.samples", 5000);
  o.report_interval = cfg.integer(sec, "n.report", std::max<Index>(1, o.n_samples / 2));
  o.seed = seed_override ? *seed_override : static_cast<std::uint64_t>(cfg.integer(sec, "seed", 1));
  const Vector tuning = recycle(cfg.numbers("dynamic.tuning", "phi"), steps, "[dynamic.tuning] phi");
  require((tuning.array() > 0.0).all(), ErrorKind::ConfigError, "[dynamic.tuning] phi must be positive");
  o.phi_tuning_sd = tuning.array().sqrt();
  if (family.has_nu()) o.nu = cfg.number(sec, "nu");
  o.keep_u = cfg.flag(sec, "keep.u", false);
  return d;
}

}  // namespace geomc
