#pragma once

#include "geomc/linalg.hpp"

namespace geomc {

/// N(B b, B) held as b and L = chol(B^{-1}); draws follow
/// x = L'^{-1}(L^{-1} b) + L'^{-1} z.
struct PrecisionForm {
  Vector b;
  CholFactor<double> l;

  Vector mean() const {
    Vector m = b;
    trsolve_in_place(l, m, Side::Lower);
    trsolve_in_place(l, m, Side::Upper);
    return m;
  }

  Vector draw(const Vector& z) const {
    require(z.size() == l.size(), ErrorKind::DimensionMismatch, "noise vector has wrong length");
    Vector m = b;
    trsolve_in_place(l, m, Side::Lower);
    Vector x = m + z;
    trsolve_in_place(l, x, Side::Upper);
    return x;
  }
};

/// N(B b, B) held as b and L = chol(B); draws follow x = L L' b + L z.
struct CovarianceForm {
  Vector b;
  CholFactor<double> l;

  Vector mean() const {
    const auto lt = l.lower().triangularView<Eigen::Lower>();
    return lt * (lt.transpose() * b);
  }

  Vector draw(const Vector& z) const {
    require(z.size() == l.size(), ErrorKind::DimensionMismatch, "noise vector has wrong length");
    const auto lt = l.lower().triangularView<Eigen::Lower>();
    return lt * (lt.transpose() * b + z);
  }
};

}  // namespace geomc
