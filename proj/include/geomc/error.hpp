#pragma once

#include <stdexcept>
#include <string>

namespace geomc {

enum class ErrorKind {
  DimensionMismatch,
  NotPositiveDefinite,
  SingularTriangular,
  InvalidParam,
  OutOfSupport,
  TooManyKnots,
  RankDeficientX,
  MissingNotAllowed,
  AllMissingStep,
  ParseError,
  ConfigError,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Factorization failure carrying the offending pivot (0-based column).
class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(long pivot, const std::string& context)
      : Error(ErrorKind::NotPositiveDefinite,
              "pivot " + std::to_string(pivot) + " not positive" +
                  (context.empty() ? std::string() : " (" + context + ")")),
        pivot_(pivot),
        context_(context) {}

  long pivot() const noexcept { return pivot_; }
  const std::string& context() const noexcept { return context_; }

 private:
  long pivot_;
  std::string context_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

// Rethrows `e` with extra context appended, preserving the kind.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

}  // namespace geomc
