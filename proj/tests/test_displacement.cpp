#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "moire/displacement.hpp"

using namespace moire;
using moire::testing::graphene_geometry;
using moire::testing::random_field;
using moire::testing::random_point;

TEST_CASE("DisplacementField evaluation") {
  const auto g = graphene_geometry(5.0);

  SECTION("Hermitian symmetry is enforced and values are real") {
    DisplacementField u(g, 3);
    u.set_mode(0, Index2(1, 2), Vec3c(Complex(0.1, 0.2), Complex(-0.3, 0.05), Complex(0, 0)));
    const Vec3c back = u.mode(0, Index2(-1, -2));
    CHECK(back[0] == std::conj(Complex(0.1, 0.2)));
    CHECK(back[1] == std::conj(Complex(-0.3, 0.05)));

    // the zero mode drops its imaginary part
    u.set_mode(0, Index2(0, 0), Vec3c(Complex(0.5, 0.7), Complex(0, 0), Complex(0, 0)));
    CHECK(u.mode(0, Index2(0, 0))[0] == Complex(0.5, 0.0));
  }

  SECTION("series evaluation matches direct mode summation") {
    const auto u = random_field(g, 3, 0.2, 7);
    auto gen = moire::testing::rng(8);
    for (int i = 0; i < 100; ++i) {
      const Vec2 x = random_point(gen, 80.0);
      Vec3c direct = Vec3c::Zero();
      for (const auto& m : u.modes(0)) {
        const double phase = (g.B_M * m.n.cast<double>()).dot(x);
        direct += m.c * Complex(std::cos(phase), std::sin(phase));
      }
      CHECK((u.eval(x, 0) - direct.real()).norm() < 1e-12);
      CHECK(direct.imag().norm() < 1e-12);  // Hermitian => real
    }
  }

  SECTION("moire periodicity") {
    const auto u = random_field(g, 4, 0.3, 9);
    auto gen = moire::testing::rng(10);
    for (int i = 0; i < 100; ++i) {
      const Vec2 x = random_point(gen, 30.0);
      const Vec2 shift = g.A_M * Vec2(2, -1);
      CHECK((u.eval(x + shift, 0) - u.eval(x, 0)).norm() < 1e-10);
    }
  }

  SECTION("spectral gradient matches finite differences") {
    const auto u = random_field(g, 3, 0.2, 11);
    auto gen = moire::testing::rng(12);
    for (int i = 0; i < 30; ++i) {
      const Vec2 x = random_point(gen, 50.0);
      const auto Du = u.gradient(x, 0);
      const double h = 1e-6;
      for (int b = 0; b < 2; ++b) {
        Vec2 xp = x, xm = x;
        xp[b] += h;
        xm[b] -= h;
        const Vec3 fd = (u.eval(xp, 0) - u.eval(xm, 0)) / (2 * h);
        for (int a = 0; a < 3; ++a)
          CHECK(Du(a, b) == Catch::Approx(fd[a]).margin(1e-7));
      }
    }
  }

  SECTION("coefficient-sum norm bounds dominate sampled values") {
    const auto u = random_field(g, 3, 0.2, 13, 1, false);
    const double bound = u.sup_norm_bound();
    const double bound_z = u.sup_norm_bound_z();
    auto gen = moire::testing::rng(14);
    for (int i = 0; i < 200; ++i) {
      const Vec2 x = random_point(gen, 100.0);
      CHECK(u.eval(x, 0).norm() <= bound + 1e-12);
      CHECK(std::abs(u.eval(x, 0)[2]) <= bound_z + 1e-12);
    }
  }
}
