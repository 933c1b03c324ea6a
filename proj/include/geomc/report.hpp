#pragma once

#include <ostream>
#include <string>

namespace geomc {

/// Console progress in the familiar R-package layout. A null stream silences it.
class ProgressReporter {
 public:
  explicit ProgressReporter(std::ostream* out = nullptr) : out_(out) {}

  bool enabled() const { return out_ != nullptr; }
  std::ostream* stream() const { return out_; }

  void heading(const std::string& title) const;
  void separator() const;
  void line(const std::string& text) const;
  /// "Sampled: k of N, pct%"
  void sampled(long k, long total) const;
  /// "Report interval [Mean ]Metrop. Acceptance rate: x%" then the overall line.
  void acceptance(double interval_rate, double overall_rate, bool mean_label = false) const;

 private:
  std::ostream* out_;
};

std::string format_percent(double fraction);

}  // namespace geomc
