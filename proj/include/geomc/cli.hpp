#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace geomc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

struct CliOptions {
  std::string command;  // fit-full | fit-pp | recover | predict | fit-dynamic | simulate
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool quiet = false;
};

/// Runs one command; progress goes to `out` unless quiet, errors to `err`.
/// Returns the process exit status.
int run(const CliOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv (geomc <command> --config <path> [--seed N] [--out DIR]
/// [--quiet]) and runs it.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace geomc
