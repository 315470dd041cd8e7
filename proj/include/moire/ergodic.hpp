#pragma once

#include "moire/dirichlet.hpp"
#include "moire/observable.hpp"
#include "moire/parallel.hpp"

namespace moire {

namespace detail {

// flatten [-N,N]^2 row-major
inline Index2 site_index(long flat, long N) {
  const long width = 2 * N + 1;
  return Index2(flat / width - N, flat % width - N);
}

}  // namespace detail

/// Finite-N ergodic average of a moire-periodic observable over the shifted
/// truncated lattice gamma_j + A_j [-N,N]^2:
///   A_N(f) = (2N+1)^{-2} sum f(<R_j + gamma_j>_M).
inline Complex ergodic_average(const BilayerGeometry& g, int j, const PeriodicObservable& f,
                               long N, const Vec2& gamma = Vec2::Zero()) {
  if (N < 0) throw ValidationError("ergodic_average: N must be >= 0");
  const long width = 2 * N + 1;
  const Mat2& Aj = g.layer_basis(j);
  const Complex total = chunked_sum<Complex>(
      width * width,
      [&](long flat) {
        const Index2 m = detail::site_index(flat, N);
        const Vec2 x = Aj * m.cast<double>() + gamma;
        return f.eval(moire_frac(g, x).frac);
      },
      Complex{0.0, 0.0});
  return total / static_cast<double>(width * width);
}

/// Finite-N double ergodic average: the observable sees the moire disregistry
/// of R_j + omega_M and the layer-(3-j) disregistry of R_j + omega_layer.
inline Complex ergodic_average_double(const BilayerGeometry& g, int j,
                                      const DoubleObservable& h, long N, const Vec2& omega_M,
                                      const Vec2& omega_layer) {
  if (N < 0) throw ValidationError("ergodic_average_double: N must be >= 0");
  const long width = 2 * N + 1;
  const Mat2& Aj = g.layer_basis(j);
  const Complex total = chunked_sum<Complex>(
      width * width,
      [&](long flat) {
        const Index2 m = detail::site_index(flat, N);
        const Vec2 R = Aj * m.cast<double>();
        return h.eval(moire_frac(g, R + omega_M).frac,
                      layer_frac(g, R + omega_layer, 3 - j).frac);
      },
      Complex{0.0, 0.0});
  return total / static_cast<double>(width * width);
}

/// Cell average of f over Gamma_M by the n x n periodic trapezoid rule in
/// lattice coordinates (spectrally accurate for smooth periodic f).
inline Complex limit_average(const BilayerGeometry& g, const PeriodicObservable& f, long n) {
  if (n < 2) throw ValidationError("limit_average: grid must be >= 2");
  const Complex total = chunked_sum<Complex>(
      n * n,
      [&](long flat) {
        const long a = flat / n, b = flat % n;
        const Vec2 x = g.A_M * Vec2(static_cast<double>(a) / n, static_cast<double>(b) / n);
        return f.eval(x);
      },
      Complex{0.0, 0.0});
  return total / static_cast<double>(n * n);
}

/// Limit of the double ergodic average: quadrature over Gamma_M of
/// x -> h(x, D_{j->3-j}(x - omega_M) + omega_layer).
inline Complex limit_average_double(const BilayerGeometry& g, int j, const DoubleObservable& h,
                                    const Vec2& omega_M, const Vec2& omega_layer, long n) {
  if (n < 2) throw ValidationError("limit_average_double: grid must be >= 2");
  const Mat2 D = disregistry_matrix(g, j);
  const Complex total = chunked_sum<Complex>(
      n * n,
      [&](long flat) {
        const long a = flat / n, b = flat % n;
        const Vec2 x = g.A_M * Vec2(static_cast<double>(a) / n, static_cast<double>(b) / n);
        return h.eval(x, D * (x - omega_M) + omega_layer);
      },
      Complex{0.0, 0.0});
  return total / static_cast<double>(n * n);
}

/// Fourier-coefficient reconstruction from samples on one shifted lattice:
///   (2N+1)^{-2} sum e^{-i G_M.(gamma + R_j)} u(<gamma + R_j>_M)
/// which tends to uhat(G_M) for moire-periodic u.
inline Complex reconstruct_fourier(const BilayerGeometry& g, int j,
                                   const std::function<Complex(const Vec2&)>& u,
                                   const Vec2& G_M, const Vec2& gamma, long N) {
  if (N < 0) throw ValidationError("reconstruct_fourier: N must be >= 0");
  const long width = 2 * N + 1;
  const Mat2& Aj = g.layer_basis(j);
  const Complex total = chunked_sum<Complex>(
      width * width,
      [&](long flat) {
        const Index2 m = detail::site_index(flat, N);
        const Vec2 x = gamma + Aj * m.cast<double>();
        const double phase = -G_M.dot(x);
        return Complex(std::cos(phase), std::sin(phase)) * u(moire_frac(g, x).frac);
      },
      Complex{0.0, 0.0});
  return total / static_cast<double>(width * width);
}

}  // namespace moire
