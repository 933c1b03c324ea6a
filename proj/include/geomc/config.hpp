#pragma once

// Sectioned key = value run configuration. Key names follow the classic
// R argument names (sigma.sq.IG, phi.Unif, n.samples, ...); see README.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "geomc/dynamic.hpp"
#include "geomc/io.hpp"
#include "geomc/lowrank.hpp"
#include "geomc/predict.hpp"
#include "geomc/recover.hpp"

namespace geomc {

class ConfigFile {
 public:
  static ConfigFile load(const std::filesystem::path& path);
  /// `base_dir` anchors relative paths.
  static ConfigFile parse(const std::string& text, const std::filesystem::path& base_dir = ".");

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
  double number(const std::string& section, const std::string& key) const;
  double number(const std::string& section, const std::string& key, double fallback) const;
  Index integer(const std::string& section, const std::string& key, Index fallback) const;
  bool flag(const std::string& section, const std::string& key, bool fallback) const;
  /// Comma- or whitespace-separated numbers.
  std::vector<double> numbers(const std::string& section, const std::string& key) const;
  std::vector<std::string> strings(const std::string& section, const std::string& key) const;
  std::filesystem::path path(const std::string& section, const std::string& key) const;

  const std::string& text() const { return text_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  boost::property_tree::ptree tree_;
  std::string text_;
  std::filesystem::path base_dir_;
};

SpatialColumns spatial_columns(const ConfigFile& cfg, const std::string& section = "data");
CovFamily cov_family(const ConfigFile& cfg);
/// Starting values, priors and proposal variances ([tuning] holds variances
/// on the transformed scale; the proposal sd is their square root).
ThetaSpec theta_spec(const ConfigFile& cfg, const CovFamily& family);
BetaPrior beta_prior(const ConfigFile& cfg, Index p);
SamplerOptions sampler_options(const ConfigFile& cfg, std::optional<std::uint64_t> seed_override);
/// Knot layout from [model] knots = nx, ny, extend or knots.file; nullopt
/// when the model is full rank.
std::optional<KnotSpec> knot_spec(const ConfigFile& cfg);
PPParametrization pp_parametrization(const ConfigFile& cfg);
RecoverOptions recover_options(const ConfigFile& cfg, std::uint64_t seed);

struct DynamicConfig {
  DynamicColumns columns;
  DynamicPriors priors;
  DynamicStart start;
  DynamicOptions options;
};

/// [dynamic], [dynamic.priors], [dynamic.starting], [dynamic.tuning]. Lists
/// with one value are recycled over time steps.
DynamicConfig dynamic_config(const ConfigFile& cfg, const CovFamily& family,
                             std::optional<std::uint64_t> seed_override);

}  // namespace geomc
