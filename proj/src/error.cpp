#include "geomc/error.hpp"

namespace geomc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularTriangular: return "SingularTriangular";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::OutOfSupport: return "OutOfSupport";
    case ErrorKind::TooManyKnots: return "TooManyKnots";
    case ErrorKind::RankDeficientX: return "RankDeficientX";
    case ErrorKind::MissingNotAllowed: return "MissingNotAllowed";
    case ErrorKind::AllMissingStep: return "AllMissingStep";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Error";
}

void rethrow_with_context(const Error& e, const std::string& context) {
  if (const auto* npd = dynamic_cast<const NotPositiveDefiniteError*>(&e))
    throw NotPositiveDefiniteError(
        npd->pivot(), npd->context().empty() ? context : npd->context() + "; " + context);
  // Strip the "Kind: " prefix the constructor added so it is not doubled.
  std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.kind())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
  throw Error(e.kind(), msg + " (" + context + ")");
}

}  // namespace geomc
