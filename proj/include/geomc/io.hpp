#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geomc/dynamic.hpp"
#include "geomc/model_spec.hpp"

namespace geomc {

/// A numeric table with a header row. Missing cells (the literal NA) are NaN.
struct CsvTable {
  std::vector<std::string> header;
  Matrix values;

  /// Index of a named column; throws ParseError if absent.
  Index column(const std::string& name) const;
  Vector column_values(const std::string& name) const;
};

/// Parses comma-separated numeric data with one header row. NA cells are
/// accepted only when `allow_na`; otherwise MissingNotAllowed is thrown.
/// Errors carry 1-based line and column numbers.
CsvTable parse_csv(const std::string& text, bool allow_na, const std::string& source = "<string>");
CsvTable read_csv(const std::filesystem::path& path, bool allow_na);

/// Shortest form that reads back to the same double (17 significant digits);
/// NaN is written as NA.
std::string format_double(double v);

/// Writes header and rows, replacing the file atomically (temp file + rename).
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Matrix& values);

/// Writes `text` to `path` atomically.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Which columns of a spatial CSV hold the coordinates, outcome and covariates.
struct SpatialColumns {
  std::string coord_x = "x";
  std::string coord_y = "y";
  std::string outcome = "y";
  std::vector<std::string> covariates;
  bool intercept = true;
};

/// Design matrix [1 :] covariates from the named columns of `table`.
Matrix design_from_table(const CsvTable& table, const SpatialColumns& cols);
Coords coords_from_table(const CsvTable& table, const SpatialColumns& cols);

SpatialDataset load_spatial(const std::filesystem::path& path, const SpatialColumns& cols);

/// Wide station-by-time layout: one row per station, outcome columns
/// <outcome_prefix>1 .. <outcome_prefix>T and, for every covariate prefix,
/// columns <prefix>1 .. <prefix>T.
struct DynamicColumns {
  std::string coord_x = "x";
  std::string coord_y = "y";
  std::string outcome_prefix = "y.";
  std::vector<std::string> covariate_prefixes;
  bool intercept = true;
  Index steps = 0;
};

DynamicDataset load_dynamic(const std::filesystem::path& path, const DynamicColumns& cols);

/// Output directory of one run: one CSV per sample block plus manifest.json
/// listing every block, the config hash, seed, acceptance rates and wall time.
class SampleStore {
 public:
  explicit SampleStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  /// Writes <name>.csv and records it in the manifest.
  void put(const std::string& name, const std::vector<std::string>& header, const Matrix& values);
  /// Reads a block written by put(), from this store's directory.
  CsvTable get(const std::string& name) const;
  bool has(const std::string& name) const;

  void set_info(const std::string& key, const std::string& value) { info_[key] = value; }
  void set_acceptance(const std::string& key, double rate) { acceptance_[key] = rate; }

  void write_manifest(const std::string& command, std::uint64_t config_hash, std::uint64_t seed,
                      double wall_seconds) const;

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::pair<Index, Index>>> files_;  // name, (rows, cols)
  std::map<std::string, std::string> info_;
  std::map<std::string, double> acceptance_;
};

}  // namespace geomc
