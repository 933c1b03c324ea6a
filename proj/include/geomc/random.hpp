#pragma once

#include <cstdint>
#include <random>

#include "geomc/linalg.hpp"

namespace geomc {

/// Seeded source of the variates every sampler needs. Copying a stream
/// copies its state; two copies produce identical sequences.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Gamma with the given shape and scale (mean shape * scale).
  double gamma(double shape, double scale) {
    std::gamma_distribution<double> g(shape, scale);
    return g(engine_);
  }

  /// Inverse-gamma with density proportional to x^{-shape-1} exp(-scale / x).
  double inverse_gamma(double shape, double scale) { return 1.0 / gamma(shape, 1.0 / scale); }

  double chi_squared(double df) { return gamma(0.5 * df, 2.0); }

  Vector normals(Index n) {
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  /// Independent stream keyed by (seed, index); used to give each retained
  /// sample or chain its own deterministic substream.
  RandomStream substream(std::uint64_t index) const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x9e3779b9u};
    std::uint64_t s = 0;
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    s = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    return RandomStream(s);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// mean + L z with z drawn from `rng`.
template <typename DerivedM>
Vector mvn_draw(const Eigen::MatrixBase<DerivedM>& mean, const CholFactor<double>& l, RandomStream& rng) {
  require(mean.size() == l.size(), ErrorKind::DimensionMismatch, "mvn_draw: dimension mismatch");
  const Vector z = rng.normals(l.size());
  return mvn_transport(mean, l, z);
}

}  // namespace geomc
