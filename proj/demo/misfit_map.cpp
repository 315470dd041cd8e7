// Computes the Morse stacking-fault energy over one unit cell of the
// unrotated layer and writes a plot-ready CSV.  Build with the `demos`
// target and run from anywhere:
//
//   ./demo_misfit_map > misfit.csv

#include <cstdio>

#include "moire/moire.hpp"

int main() {
  using namespace moire;

  const double a0 = 2.46, s3 = std::sqrt(3.0);
  Mat2 A;
  A << a0 * s3 / 2, a0 * s3 / 2, -a0 / 2, a0 / 2;
  const auto g = build_geometry(A, 5.0 * pi / 180.0, 1.0);

  const auto v = PairPotential::morse(2.8437, 1.8168, 3.6891);
  const double z_offset = 3.35;
  DecayScanOptions opt;
  opt.z_center = z_offset;
  const double Rc = decay_radius(v, 1e-10, 0.0, opt);

  std::printf("a,b,x,y,phi_mev\n");
  const long grid = 96;
  for (long a = 0; a < grid; ++a)
    for (long b = 0; b < grid; ++b) {
      const Vec2 x = g.A2 * Vec2(static_cast<double>(a) / grid,
                                 static_cast<double>(b) / grid);
      std::printf("%ld,%ld,%.6f,%.6f,%.10g\n", a, b, x[0], x[1],
                  misfit_energy(g, 1, v, x, z_offset, Rc));
    }

  std::fprintf(stderr, "AA: %.6f meV  AB: %.6f meV  BA: %.6f meV\n",
               misfit_energy(g, 1, v, Vec2::Zero(), z_offset, Rc),
               misfit_energy(g, 1, v, stacking_AB(g, 1), z_offset, Rc),
               misfit_energy(g, 1, v, stacking_BA(g, 1), z_offset, Rc));
  return 0;
}
