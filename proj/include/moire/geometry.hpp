#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "moire/core.hpp"

namespace moire {

/// Full lattice algebra of one twisted bilayer.
///
/// Layer bases are built from a common cell A, a twist theta and a lattice
/// mismatch q:
///   A1 = q^{-1/2} R_{-theta/2} A,   A2 = q^{1/2} R_{theta/2} A,
/// with reciprocal bases Bj = 2*pi*Aj^{-T}.  The moire reciprocal basis is
/// B_M = B1 - B2 and the moire direct basis A_M = 2*pi*B_M^{-T}
/// = (A1^{-1} - A2^{-1})^{-1}.
struct BilayerGeometry {
  Mat2 A;
  double theta = 0.0;  // radians
  double q = 1.0;

  Mat2 A1, A2;
  Mat2 B1, B2;
  Mat2 A_M, B_M;

  // cached inverses, used by the fractional-part maps
  Mat2 A1_inv, A2_inv, AM_inv;

  double area_gamma1 = 0.0, area_gamma2 = 0.0, area_gammaM = 0.0;

  const Mat2& layer_basis(int j) const { return j == 1 ? A1 : A2; }
  const Mat2& layer_basis_inv(int j) const { return j == 1 ? A1_inv : A2_inv; }
  const Mat2& reciprocal_basis(int j) const { return j == 1 ? B1 : B2; }
  double layer_area(int j) const { return j == 1 ? area_gamma1 : area_gamma2; }
};

/// One sublattice site: a label and its shift vector within the cell.
struct Sublattice {
  std::string label;
  Vec2 tau = Vec2::Zero();
};

/// Per-layer sublattice sets and optional layer shifts gamma_j.
struct SublatticeSpec {
  std::vector<Sublattice> layer1{{"0", Vec2::Zero()}};
  std::vector<Sublattice> layer2{{"0", Vec2::Zero()}};
  Vec2 gamma1 = Vec2::Zero();
  Vec2 gamma2 = Vec2::Zero();

  const std::vector<Sublattice>& layer(int j) const { return j == 1 ? layer1 : layer2; }
  const Vec2& gamma(int j) const { return j == 1 ? gamma1 : gamma2; }

  /// Largest shift difference max |tau_1 - tau_2| between the two layers.
  double sublattice_distance() const {
    double d = 0.0;
    for (const auto& s1 : layer1)
      for (const auto& s2 : layer2) d = std::max(d, (s1.tau - s2.tau).norm());
    return d;
  }
};

/// x split against a lattice: x = basis * integer + frac, frac in basis*[0,1)^2.
struct CellDecomposition {
  Vec2 frac = Vec2::Zero();
  Index2 integer = Index2::Zero();
};

/// Layer bases and their reciprocals only, no moire block.  Valid for any
/// theta including exactly commensurate ones; the scan operations need no
/// more than this.
inline BilayerGeometry primitive_geometry(const Mat2& A, double theta, double q) {
  if (!std::isfinite(theta)) throw ValidationError("geometry: theta not finite");
  if (!(q > 0.0) || !std::isfinite(q)) throw ValidationError("geometry: q must be positive");
  if (std::abs(A.determinant()) <= 0.0) throw SingularBasis("geometry: det(A) = 0");

  BilayerGeometry g;
  g.A = A;
  g.theta = theta;
  g.q = q;
  const double sq = std::sqrt(q);
  g.A1 = (1.0 / sq) * rotation(-theta / 2.0) * A;
  g.A2 = sq * rotation(theta / 2.0) * A;
  g.B1 = 2.0 * pi * g.A1.inverse().transpose();
  g.B2 = 2.0 * pi * g.A2.inverse().transpose();
  g.A1_inv = g.A1.inverse();
  g.A2_inv = g.A2.inverse();
  g.area_gamma1 = std::abs(g.A1.determinant());
  g.area_gamma2 = std::abs(g.A2.determinant());
  return g;
}

inline BilayerGeometry build_geometry(const Mat2& A, double theta, double q) {
  BilayerGeometry g = primitive_geometry(A, theta, q);
  g.B_M = g.B1 - g.B2;

  // near-commensurate is fine; only an (effectively) singular moire basis is rejected
  const double scale = g.B1.squaredNorm();
  if (std::abs(g.B_M.determinant()) < 1e-14 * scale)
    throw SingularBasis("build_geometry: moire basis B1 - B2 is singular (theta ~ 0, q ~ 1)");

  g.A_M = 2.0 * pi * g.B_M.inverse().transpose();
  g.AM_inv = g.A_M.inverse();
  g.area_gammaM = std::abs(g.A_M.determinant());
  return g;
}

namespace detail {

// Solve-then-floor; floor ties at exact integers resolve toward the lower
// cell, so frac lies in basis*[0,1)^2.
inline CellDecomposition decompose(const Mat2& basis, const Mat2& basis_inv, const Vec2& x) {
  const Vec2 coords = basis_inv * x;
  CellDecomposition d;
  d.integer[0] = static_cast<long>(std::floor(coords[0]));
  d.integer[1] = static_cast<long>(std::floor(coords[1]));
  d.frac = basis * (coords - Vec2(static_cast<double>(d.integer[0]),
                                  static_cast<double>(d.integer[1])));
  return d;
}

// Distance from x to the nearest point of basis*Z^2.
inline double lattice_residual(const Mat2& basis, const Mat2& basis_inv, const Vec2& x) {
  const Vec2 coords = basis_inv * x;
  const Vec2 nearest(std::round(coords[0]), std::round(coords[1]));
  return (basis * (coords - nearest)).norm();
}

}  // namespace detail

/// Disregistry with respect to the moire lattice: x = A_M*n + frac.
inline CellDecomposition moire_frac(const BilayerGeometry& g, const Vec2& x) {
  return detail::decompose(g.A_M, g.AM_inv, x);
}

/// Disregistry with respect to layer j: x = A_j*n + frac.
inline CellDecomposition layer_frac(const BilayerGeometry& g, const Vec2& x, int j) {
  return detail::decompose(g.layer_basis(j), g.layer_basis_inv(j), x);
}

/// D_{j->3-j} = I - A_{3-j} A_j^{-1}; maps moire disregistry to layer
/// disregistry on lattice points and satisfies D_{j->3-j} = (-1)^j A_{3-j} A_M^{-1}.
inline Mat2 disregistry_matrix(const BilayerGeometry& g, int j) {
  return Mat2::Identity() - g.layer_basis(3 - j) * g.layer_basis_inv(j);
}

/// v_{Gamma_j} = A_j (1,1)^T, the cell-corner correction of the disregistry
/// transformation for layer 1 lattice points.
inline Vec2 cell_corner_shift(const BilayerGeometry& g, int j) {
  return g.layer_basis(j) * Vec2::Ones();
}

/// rho_M = [(q^{1/2}-q^{-1/2})^2 + 4 sin^2(theta/2)]^{-1/2}, so that
/// |A_M x| = rho_M |A x| for all x.  (The sqrt-q form is the one the
/// direct computation of A_M yields; see README for the variant.)
inline double moire_scale(const BilayerGeometry& g) {
  const double sq = std::sqrt(g.q);
  const double sin_half = std::sin(g.theta / 2.0);
  const double bracket = (sq - 1.0 / sq) * (sq - 1.0 / sq) + 4.0 * sin_half * sin_half;
  if (bracket < 1e-28)
    throw DegenerateScale("moire_scale: bracket underflows (theta = 0, q = 1)");
  return 1.0 / std::sqrt(bracket);
}

/// Result of a finite commensuration search.
struct CommensurationVerdict {
  bool found = false;
  Index2 witness = Index2::Zero();
  double distance = 0.0;  // dist(q A^T R_theta A^{-T} n, Z^2) at the witness
  long n_max = 0;
};

/// Scans 0 < |n|_inf <= n_max for dist(q A^T R_theta A^{-T} n, Z^2) < tol.
/// Among witnesses the one with smallest |n|^2 is returned (ties prefer
/// lexicographically larger n), so e.g. theta = 0 reports n = (1,0).
inline CommensurationVerdict commensuration_scan(const BilayerGeometry& g, long n_max,
                                                 double tol) {
  if (n_max < 1) throw ValidationError("commensuration_scan: n_max must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("commensuration_scan: tol must be positive");
  const Mat2 M = g.q * g.A.transpose() * rotation(g.theta) * g.A.inverse().transpose();
  CommensurationVerdict verdict;
  verdict.n_max = n_max;
  double best_norm2 = 0.0;
  for (long n1 = -n_max; n1 <= n_max; ++n1) {
    for (long n2 = -n_max; n2 <= n_max; ++n2) {
      if (n1 == 0 && n2 == 0) continue;
      const Vec2 image = M * Vec2(static_cast<double>(n1), static_cast<double>(n2));
      const Vec2 residual(image[0] - std::round(image[0]), image[1] - std::round(image[1]));
      const double dist = residual.norm();
      if (dist >= tol) continue;
      const double norm2 = static_cast<double>(n1 * n1 + n2 * n2);
      const bool better =
          !verdict.found || norm2 < best_norm2 ||
          (norm2 == best_norm2 && (n1 > verdict.witness[0] ||
                                   (n1 == verdict.witness[0] && n2 > verdict.witness[1])));
      if (better) {
        verdict.found = true;
        verdict.witness = Index2(n1, n2);
        verdict.distance = dist;
        best_norm2 = norm2;
      }
    }
  }
  return verdict;
}

}  // namespace moire
