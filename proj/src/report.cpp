#include "geomc/report.hpp"

#include <cstdio>

namespace geomc {

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
  return buf;
}

void ProgressReporter::heading(const std::string& title) const {
  if (!out_) return;
  *out_ << "-------------------------------------------------\n"
        << "\t\t" << title << "\n"
        << "-------------------------------------------------\n";
}

void ProgressReporter::separator() const {
  if (out_) *out_ << "-------------------------------------------------\n";
}

void ProgressReporter::line(const std::string& text) const {
  if (out_) *out_ << text << "\n";
}

void ProgressReporter::sampled(long k, long total) const {
  if (!out_) return;
  *out_ << "Sampled: " << k << " of " << total << ", "
        << format_percent(static_cast<double>(k) / static_cast<double>(total)) << "\n";
}

void ProgressReporter::acceptance(double interval_rate, double overall_rate, bool mean_label) const {
  if (!out_) return;
  *out_ << "Report interval " << (mean_label ? "Mean " : "") << "Metrop. Acceptance rate: "
        << format_percent(interval_rate) << "\n"
        << "Overall Metrop. Acceptance rate: " << format_percent(overall_rate) << "\n";
}

}  // namespace geomc
