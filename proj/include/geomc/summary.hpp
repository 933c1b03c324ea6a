#pragma once

#include "geomc/linalg.hpp"

namespace geomc {

/// Sample quantile with linear interpolation between order statistics
/// (the default definition in R and NumPy).
double quantile(Vector values, double prob);

double median(const Vector& values);

struct Interval {
  double lower;
  double upper;
  bool contains(double v) const { return lower <= v && v <= upper; }
  double width() const { return upper - lower; }
};

/// Equal-tailed credible interval at the given level, e.g. 0.95.
Interval credible_interval(const Vector& values, double level = 0.95);

/// Per-column median, 2.5% and 97.5% quantiles, one row per column of `draws`.
Matrix column_summary(const Matrix& draws);

/// Pearson correlation of two equal-length vectors.
double pearson(const Vector& a, const Vector& b);

}  // namespace geomc
