#pragma once

#include "moire/geometry.hpp"

namespace moire {

/// Normalized Dirichlet kernel of the truncated lattice A_j [-N,N]^2:
///
///   delta_N(G) = (2N+1)^{-2} sum_{R in A_j[-N,N]^2} e^{i G.R}
///              = prod_l sin((2N+1) t_l / 2) / ((2N+1) sin(t_l / 2)),
///
/// with t = A_j^T G.  Each t_l is first reduced to (-pi, pi] by subtracting
/// the nearest multiple of 2*pi (the product is invariant under the shift,
/// and the reduction keeps the pole evaluation stable); a factor within
/// 2e-9 of the pole is replaced by its limit value 1.  |result| <= 1.
inline double dirichlet_kernel(const Mat2& Aj, const Vec2& G, long N) {
  if (N < 0) throw ValidationError("dirichlet_kernel: N must be >= 0");
  const Vec2 t_raw = Aj.transpose() * G;
  const double M = static_cast<double>(2 * N + 1);
  double value = 1.0;
  for (int l = 0; l < 2; ++l) {
    double t = t_raw[l];
    t -= 2.0 * pi * std::round(t / (2.0 * pi));
    const double s = std::sin(t / 2.0);
    if (std::abs(s) < 1e-9) continue;  // removable singularity: factor -> 1
    double factor = std::sin(M * t / 2.0) / (M * s);
    factor = std::min(1.0, std::max(-1.0, factor));
    value *= factor;
  }
  return value;
}

inline double dirichlet_kernel(const BilayerGeometry& g, int j, const Vec2& G, long N) {
  return dirichlet_kernel(g.layer_basis(j), G, N);
}

}  // namespace moire
