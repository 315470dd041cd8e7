#pragma once

#include <cmath>

#include "moire/core.hpp"

namespace moire {

/// Riemann zeta for real s > 1, by direct series with Euler-Maclaurin tail
/// correction; absolute accuracy ~1e-14 down to s near 1.
inline double riemann_zeta(double s) {
  if (!(s > 1.0)) throw DivergentTail("riemann_zeta: requires s > 1");
  constexpr int K = 32;
  double sum = 0.0;
  for (int k = 1; k < K; ++k) sum += std::pow(static_cast<double>(k), -s);
  const double Kd = static_cast<double>(K);
  sum += std::pow(Kd, 1.0 - s) / (s - 1.0);
  sum += 0.5 * std::pow(Kd, -s);
  sum += s / 12.0 * std::pow(Kd, -s - 1.0);
  sum -= s * (s + 1.0) * (s + 2.0) / 720.0 * std::pow(Kd, -s - 3.0);
  sum += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * std::pow(Kd, -s - 5.0);
  return sum;
}

/// zeta(2s) + 2^{-s} zeta(s)^2, the lattice-tail factor of the moire
/// reciprocal sum bound.
inline double zeta_tail_factor(double s) {
  const double z2s = riemann_zeta(2.0 * s);
  const double zs = riemann_zeta(s);
  return z2s + std::pow(2.0, -s) * zs * zs;
}

}  // namespace moire
