#pragma once

// Dense SPD kernels: Cholesky, triangular solves, log-determinants and
// multivariate-normal transport. Storage is Eigen's default column-major.
// There is deliberately no inverse() in this header: every "inverse" in the
// samplers is a pair of triangular solves against a Cholesky factor.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "geomc/error.hpp"

namespace geomc {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

/// Relative symmetry tolerance accepted by chol(): max|a_ij - a_ji| <= tol * max|a|.
inline constexpr double kSymmetryTolerance = 1e-8;

enum class Side {
  Lower,  ///< solve L x = rhs
  Upper,  ///< solve L' x = rhs
};

/// Lower-triangular Cholesky factor with a strictly positive diagonal and an
/// identically zero upper triangle. Only chol()/chol_into() produce one.
template <typename Scalar = double>
class CholFactor {
 public:
  CholFactor() = default;

  const Mat<Scalar>& lower() const { return lower_; }
  Index size() const { return lower_.rows(); }

  template <typename S, typename Derived>
  friend void chol_into(CholFactor<S>& out, const Eigen::MatrixBase<Derived>& a, double jitter,
                        const std::string& context);

 private:
  Mat<Scalar> lower_;
};

namespace detail {

template <typename Derived>
void check_symmetric(const Eigen::MatrixBase<Derived>& a) {
  // Tiled so the transposed reads stay in cache.
  constexpr Index kTile = 32;
  const Index n = a.rows();
  const double max_abs = static_cast<double>(a.cwiseAbs().maxCoeff());
  double max_asym = 0.0;
  for (Index j = 0; j < n; j += kTile) {
    const Index w = std::min(kTile, n - j);
    for (Index i = j; i < n; i += kTile) {
      const Index h = std::min(kTile, n - i);
      const auto diff = a.block(i, j, h, w) - a.block(j, i, w, h).transpose();
      max_asym = std::max(max_asym, static_cast<double>(diff.cwiseAbs().maxCoeff()));
    }
  }
  require(!(max_asym > kSymmetryTolerance * max_abs), ErrorKind::InvalidParam,
          "chol input not symmetric (max asymmetry " + std::to_string(max_asym) + ")");
}

// Unblocked pass used only on the failure path to report where the
// factorization broke down.
template <typename Scalar, typename Derived>
Index first_bad_pivot(const Eigen::MatrixBase<Derived>& a) {
  const Index n = a.rows();
  Mat<Scalar> l = Mat<Scalar>::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    Scalar d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > Scalar(0))) return j;
    l(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return n - 1;
}

}  // namespace detail

/// Factorizes `a` (optionally with `jitter` added to its diagonal) into `out`,
/// reusing out's storage when the size is unchanged.
template <typename Scalar, typename Derived>
void chol_into(CholFactor<Scalar>& out, const Eigen::MatrixBase<Derived>& a, double jitter = 0.0,
               const std::string& context = {}) {
  require(a.rows() == a.cols() && a.rows() > 0, ErrorKind::DimensionMismatch,
          "chol needs a non-empty square matrix");
  detail::check_symmetric(a);
  out.lower_.resize(a.rows(), a.cols());
  out.lower_.template triangularView<Eigen::Lower>() = a.template cast<Scalar>();
  if (jitter != 0.0) out.lower_.diagonal().array() += Scalar(jitter);

  Eigen::LLT<Eigen::Ref<Mat<Scalar>>, Eigen::Lower> llt(out.lower_);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    for (Index i = 0; i < out.lower_.rows(); ++i) {
      const Scalar d = out.lower_(i, i);
      if (!(d > Scalar(0)) || !std::isfinite(static_cast<double>(d))) {
        ok = false;
        break;
      }
    }
  }
  if (!ok) {
    Mat<Scalar> copy = a.template cast<Scalar>();
    copy.diagonal().array() += Scalar(jitter);
    throw NotPositiveDefiniteError(detail::first_bad_pivot<Scalar>(copy), context);
  }
  out.lower_.template triangularView<Eigen::StrictlyUpper>().setZero();
}

template <typename Derived>
CholFactor<typename Derived::Scalar> chol(const Eigen::MatrixBase<Derived>& a, double jitter = 0.0,
                                          const std::string& context = {}) {
  CholFactor<typename Derived::Scalar> out;
  chol_into(out, a, jitter, context);
  return out;
}

/// In-place triangular solve against a Cholesky factor.
template <typename Scalar, typename Derived>
void trsolve_in_place(const CholFactor<Scalar>& l, Eigen::MatrixBase<Derived>& rhs, Side side) {
  require(rhs.rows() == l.size(), ErrorKind::DimensionMismatch, "trsolve: rhs rows != factor size");
  if (side == Side::Lower)
    l.lower().template triangularView<Eigen::Lower>().solveInPlace(rhs);
  else
    l.lower().template triangularView<Eigen::Lower>().transpose().solveInPlace(rhs);
}

template <typename Scalar, typename Derived>
Mat<Scalar> trsolve(const CholFactor<Scalar>& l, const Eigen::MatrixBase<Derived>& rhs,
                    Side side = Side::Lower) {
  Mat<Scalar> out = rhs.template cast<Scalar>();
  trsolve_in_place(l, out, side);
  return out;
}

/// Triangular solve with a plain lower-triangular matrix. Only the lower
/// triangle of `l` is read.
template <typename DerivedL, typename DerivedR>
Mat<typename DerivedL::Scalar> trsolve(const Eigen::MatrixBase<DerivedL>& l,
                                       const Eigen::MatrixBase<DerivedR>& rhs,
                                       Side side = Side::Lower) {
  using Scalar = typename DerivedL::Scalar;
  require(l.rows() == l.cols(), ErrorKind::DimensionMismatch, "trsolve: factor not square");
  require(rhs.rows() == l.rows(), ErrorKind::DimensionMismatch, "trsolve: rhs rows != factor size");
  for (Index i = 0; i < l.rows(); ++i)
    require(l(i, i) != Scalar(0), ErrorKind::SingularTriangular,
            "zero diagonal at " + std::to_string(i));
  Mat<Scalar> out = rhs.template cast<Scalar>();
  if (side == Side::Lower)
    l.template triangularView<Eigen::Lower>().solveInPlace(out);
  else
    l.template triangularView<Eigen::Lower>().transpose().solveInPlace(out);
  return out;
}

/// A^{-1} rhs given chol(A), as two triangular solves.
template <typename Scalar, typename Derived>
Mat<Scalar> chol_solve(const CholFactor<Scalar>& l, const Eigen::MatrixBase<Derived>& rhs) {
  Mat<Scalar> out = rhs.template cast<Scalar>();
  trsolve_in_place(l, out, Side::Lower);
  trsolve_in_place(l, out, Side::Upper);
  return out;
}

/// log|A| = 2 sum log l_ii.
template <typename Scalar>
Scalar log_det_from_chol(const CholFactor<Scalar>& l) {
  return Scalar(2) * l.lower().diagonal().array().log().sum();
}

/// Sum of log l_ii (half the log-determinant).
template <typename Scalar>
Scalar half_log_det(const CholFactor<Scalar>& l) {
  return l.lower().diagonal().array().log().sum();
}

/// mean + L z for a caller-supplied standard-normal vector z.
template <typename Scalar, typename DerivedM, typename DerivedZ>
Vec<Scalar> mvn_transport(const Eigen::MatrixBase<DerivedM>& mean, const CholFactor<Scalar>& l,
                          const Eigen::MatrixBase<DerivedZ>& z) {
  require(mean.size() == l.size() && z.size() == l.size(), ErrorKind::DimensionMismatch,
          "mvn_draw: dimension mismatch");
  return mean + l.lower().template triangularView<Eigen::Lower>() * z;
}

// Diagonal products in closed form: O(n^2) instead of a dense product.

/// diag(d) * m
template <typename DerivedD, typename DerivedM>
auto diag_left(const Eigen::MatrixBase<DerivedD>& d, const Eigen::MatrixBase<DerivedM>& m) {
  return d.asDiagonal() * m;
}

/// m * diag(d)
template <typename DerivedM, typename DerivedD>
auto diag_right(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedD>& d) {
  return m * d.asDiagonal();
}

/// Copies the lower triangle onto the upper one.
template <typename Derived>
void symmetrize_from_lower(Eigen::MatrixBase<Derived>& m) {
  m.template triangularView<Eigen::StrictlyUpper>() = m.transpose();
}

}  // namespace geomc
