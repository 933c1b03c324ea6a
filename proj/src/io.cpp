#include "geomc/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace geomc {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(trim(field));
  return out;
}

std::string where(const std::string& source, std::size_t line, std::size_t col) {
  return source + ": line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

Index CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<Index>(j);
  fail(ErrorKind::ParseError, "no column named '" + name + "'");
}

Vector CsvTable::column_values(const std::string& name) const { return values.col(column(name)); }

CsvTable parse_csv(const std::string& text, bool allow_na, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  CsvTable t;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      fail(ErrorKind::ParseError, where(source, line_no, fields.size()) + ": expected " +
                                      std::to_string(t.header.size()) + " fields, found " +
                                      std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string& f = fields[j];
      if (f == "NA") {
        if (!allow_na)
          fail(ErrorKind::MissingNotAllowed, where(source, line_no, j + 1) + ": missing value (NA) not allowed");
        row[j] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double v = 0.0;
      const char* first = f.data();
      const char* last = f.data() + f.size();
      if (!f.empty() && *first == '+') ++first;
      const auto res = std::from_chars(first, last, v);
      if (f.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
        fail(ErrorKind::ParseError, where(source, line_no, j + 1) + ": cannot parse '" + f + "' as a number");
      row[j] = v;
    }
    rows.push_back(std::move(row));
  }
  if (t.header.empty()) fail(ErrorKind::ParseError, source + ": empty file");
  t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return t;
}

CsvTable read_csv(const fs::path& path, bool allow_na) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), allow_na, path.string());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::ConfigError, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) fail(ErrorKind::ConfigError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const Matrix& values) {
  require(static_cast<Index>(header.size()) == values.cols(), ErrorKind::DimensionMismatch,
          "header length != column count for " + path.string());
  std::string text;
  text.reserve(static_cast<std::size_t>(values.size()) * 24 + 256);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) text += ',';
    text += header[j];
  }
  text += '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) text += ',';
      text += format_double(values(i, j));
    }
    text += '\n';
  }
  write_text_atomic(path, text);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Coords coords_from_table(const CsvTable& table, const SpatialColumns& cols) {
  Coords c(table.values.rows(), 2);
  c.col(0) = table.column_values(cols.coord_x);
  c.col(1) = table.column_values(cols.coord_y);
  return c;
}

Matrix design_from_table(const CsvTable& table, const SpatialColumns& cols) {
  const Index n = table.values.rows();
  const Index offset = cols.intercept ? 1 : 0;
  Matrix x(n, offset + static_cast<Index>(cols.covariates.size()));
  if (cols.intercept) x.col(0).setOnes();
  for (std::size_t j = 0; j < cols.covariates.size(); ++j)
    x.col(offset + static_cast<Index>(j)) = table.column_values(cols.covariates[j]);
  require(x.cols() > 0, ErrorKind::ConfigError, "model has no covariates and no intercept");
  return x;
}

SpatialDataset load_spatial(const fs::path& path, const SpatialColumns& cols) {
  const CsvTable t = read_csv(path, false);
  try {
    return SpatialDataset::make(coords_from_table(t, cols), t.column_values(cols.outcome),
                                design_from_table(t, cols));
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

DynamicDataset load_dynamic(const fs::path& path, const DynamicColumns& cols) {
  const CsvTable t = read_csv(path, true);
  require(cols.steps >= 1, ErrorKind::ConfigError, "number of time steps must be >= 1");
  const Index n = t.values.rows();
  Coords coords(n, 2);
  coords.col(0) = t.column_values(cols.coord_x);
  coords.col(1) = t.column_values(cols.coord_y);
  require(coords.allFinite(), ErrorKind::MissingNotAllowed, "missing station coordinates in " + path.string());
  Matrix y(n, cols.steps);
  std::vector<Matrix> x;
  const Index offset = cols.intercept ? 1 : 0;
  const Index p = offset + static_cast<Index>(cols.covariate_prefixes.size());
  require(p > 0, ErrorKind::ConfigError, "model has no covariates and no intercept");
  for (Index s = 0; s < cols.steps; ++s) {
    const std::string suffix = std::to_string(s + 1);
    y.col(s) = t.column_values(cols.outcome_prefix + suffix);
    Matrix xt(n, p);
    if (cols.intercept) xt.col(0).setOnes();
    for (std::size_t j = 0; j < cols.covariate_prefixes.size(); ++j) {
      const std::string name = cols.covariate_prefixes[j] + suffix;
      xt.col(offset + static_cast<Index>(j)) = t.column_values(name);
      require(xt.col(offset + static_cast<Index>(j)).allFinite(), ErrorKind::MissingNotAllowed,
              "missing covariate values in column " + name);
    }
    x.push_back(std::move(xt));
  }
  try {
    return DynamicDataset::make(coords, y, std::move(x));
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

SampleStore::SampleStore(fs::path dir) : dir_(std::move(dir)) {}

void SampleStore::put(const std::string& name, const std::vector<std::string>& header, const Matrix& values) {
  write_csv(dir_ / (name + ".csv"), header, values);
  for (auto& f : files_)
    if (f.first == name) {
      f.second = {values.rows(), values.cols()};
      return;
    }
  files_.push_back({name, {values.rows(), values.cols()}});
}

CsvTable SampleStore::get(const std::string& name) const { return read_csv(dir_ / (name + ".csv"), true); }

bool SampleStore::has(const std::string& name) const { return fs::exists(dir_ / (name + ".csv")); }

void SampleStore::write_manifest(const std::string& command, std::uint64_t config_hash, std::uint64_t seed,
                                 double wall_seconds) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_hash"] = hex64(config_hash);
  j["seed"] = seed;
  j["wall_time_seconds"] = wall_seconds;
  nlohmann::ordered_json acc = nlohmann::ordered_json::object();
  for (const auto& [k, v] : acceptance_) acc[k] = v;
  j["acceptance"] = acc;
  nlohmann::ordered_json info = nlohmann::ordered_json::object();
  for (const auto& [k, v] : info_) info[k] = v;
  j["info"] = info;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& [name, shape] : files_)
    files.push_back({{"file", name + ".csv"}, {"rows", shape.first}, {"columns", shape.second}});
  j["files"] = files;
  write_text_atomic(dir_ / "manifest.json", j.dump(2) + "\n");
}

}  // namespace geomc
