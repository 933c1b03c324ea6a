#include "geomc/summary.hpp"

#include <algorithm>
#include <cmath>

namespace geomc {

double quantile(Vector values, double prob) {
  require(values.size() > 0, ErrorKind::InvalidParam, "quantile of an empty sample");
  require(prob >= 0.0 && prob <= 1.0, ErrorKind::InvalidParam, "probability outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<Index>(std::floor(h));
  const Index hi = std::min<Index>(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(const Vector& values) { return quantile(values, 0.5); }

Interval credible_interval(const Vector& values, double level) {
  const double tail = 0.5 * (1.0 - level);
  return {quantile(values, tail), quantile(values, 1.0 - tail)};
}

Matrix column_summary(const Matrix& draws) {
  Matrix out(draws.cols(), 3);
  for (Index j = 0; j < draws.cols(); ++j) {
    const Vector col = draws.col(j);
    out(j, 0) = median(col);
    out(j, 1) = quantile(col, 0.025);
    out(j, 2) = quantile(col, 0.975);
  }
  return out;
}

double pearson(const Vector& a, const Vector& b) {
  require(a.size() == b.size() && a.size() > 1, ErrorKind::DimensionMismatch, "pearson: size mismatch");
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

}  // namespace geomc
