#pragma once

#include <random>

#include "moire/displacement.hpp"
#include "moire/geometry.hpp"

namespace moire::testing {

inline Mat2 graphene_cell(double a0 = 2.46) {
  Mat2 A;
  const double s3 = std::sqrt(3.0);
  A << s3 / 2.0, s3 / 2.0, -0.5, 0.5;
  return a0 * A;
}

inline BilayerGeometry graphene_geometry(double theta_deg, double q = 1.0) {
  return build_geometry(graphene_cell(), theta_deg * pi / 180.0, q);
}

inline std::mt19937_64 rng(unsigned long seed = 0x5eed5eedUL) { return std::mt19937_64(seed); }

inline Vec2 random_point(std::mt19937_64& gen, double box) {
  std::uniform_real_distribution<double> dist(-box, box);
  return Vec2(dist(gen), dist(gen));
}

/// Random smooth displacement field: Hermitian modes with amplitudes scaled
/// by amplitude / (1 + |n|^2)^2 so high modes roll off.
inline DisplacementField random_field(const BilayerGeometry& g, int n_cut, double amplitude,
                                      unsigned long seed, int sublattices = 1,
                                      bool in_plane_only = true) {
  DisplacementField u(g, n_cut, sublattices);
  auto gen = rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int alpha = 0; alpha < sublattices; ++alpha) {
    for (long a = 0; a <= n_cut; ++a)
      for (long b = (a == 0 ? 0 : -n_cut); b <= n_cut; ++b) {
        const double scale =
            amplitude / std::pow(1.0 + static_cast<double>(a * a + b * b), 2.0);
        Vec3c c;
        c << Complex(d(gen), d(gen)), Complex(d(gen), d(gen)), Complex(d(gen), d(gen));
        if (in_plane_only) c[2] = Complex(0.0, 0.0);
        u.set_mode(alpha, Index2(a, b), scale * c);
      }
  }
  return u;
}

}  // namespace moire::testing
