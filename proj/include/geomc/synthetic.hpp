#pragma once

// Data generators for the simulation studies and tests.

#include "geomc/dynamic.hpp"
#include "geomc/model_spec.hpp"
#include "geomc/random.hpp"

namespace geomc {

struct SyntheticSpatial {
  Coords coords;
  Matrix x;  // n x p, intercept first, remaining columns N(0, 1)
  Vector w;  // latent spatial effects
  Vector y;

  SpatialDataset dataset() const { return SpatialDataset::make(coords, y, x); }
};

/// n locations uniform on the unit square, y = X beta + w + eps with
/// w ~ N(0, sigma^2 R(phi)) and eps ~ N(0, tau^2 I).
SyntheticSpatial simulate_spatial(Index n, const Vector& beta, const CovFamily& family, const ProcessParams& theta,
                                  RandomStream& rng);

struct SyntheticDynamic {
  Coords coords;
  std::vector<Matrix> x;  // per step, n x p, intercept first
  Matrix y;               // n x T, complete
  Matrix beta;            // p x T
  Matrix u;               // n x T
};

/// Draws from the dynamic model with constant per-step sigma^2, tau^2 and
/// phi, beta_0 given and Sigma_eta given; coordinates uniform on `extent`.
SyntheticDynamic simulate_dynamic(Index n, Index steps, const Vector& beta0, const Matrix& sigma_eta,
                                  const CovFamily& family, const ProcessParams& theta, double extent,
                                  RandomStream& rng);

/// Coordinates uniform on [0, extent]^2.
Coords uniform_coords(Index n, double extent, RandomStream& rng);

}  // namespace geomc
