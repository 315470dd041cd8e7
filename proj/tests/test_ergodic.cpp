#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "moire/diophantine.hpp"
#include "moire/ergodic.hpp"

using namespace moire;
using moire::testing::graphene_geometry;

namespace {

// independent brute-force kernel: (2N+1)^{-2} sum over the truncated lattice
Complex kernel_brute(const Mat2& Aj, const Vec2& G, long N) {
  Complex acc{0, 0};
  for (long a = -N; a <= N; ++a)
    for (long b = -N; b <= N; ++b) {
      const double phase = G.dot(Aj * Vec2(static_cast<double>(a), static_cast<double>(b)));
      acc += Complex(std::cos(phase), std::sin(phase));
    }
  return acc / static_cast<double>((2 * N + 1) * (2 * N + 1));
}

std::vector<FourierMode> random_hermitian_modes(const long n_cut, unsigned long seed,
                                                double amplitude = 1.0) {
  auto gen = moire::testing::rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::vector<FourierMode> modes;
  for (long a = -n_cut; a <= n_cut; ++a)
    for (long b = -n_cut; b <= n_cut; ++b) {
      if (a < 0 || (a == 0 && b < 0)) continue;  // canonical half
      Complex c(coeff(gen), coeff(gen));
      if (a == 0 && b == 0) c = Complex(c.real(), 0.0);
      modes.push_back({Index2(a, b), amplitude * c});
      if (!(a == 0 && b == 0))
        modes.push_back({Index2(-a, -b), amplitude * std::conj(c)});
    }
  return modes;
}

}  // namespace

TEST_CASE("dirichlet_kernel closed form") {
  const auto g = graphene_geometry(5.0);

  SECTION("G = 0 gives 1 for every N") {
    for (long N : {0, 1, 5, 20}) CHECK(dirichlet_kernel(g, 1, Vec2::Zero(), N) == 1.0);
  }

  SECTION("reciprocal lattice vectors give exactly 1") {
    auto gen = moire::testing::rng(21);
    std::uniform_int_distribution<long> idx(-40, 40);
    for (int j : {1, 2}) {
      CHECK(std::abs(dirichlet_kernel(g, j, g.reciprocal_basis(j) * Vec2(2, -1), 7) - 1.0) <
            1e-12);
      for (int i = 0; i < 100; ++i) {
        const Vec2 G = g.reciprocal_basis(j) *
                       Vec2(static_cast<double>(idx(gen)), static_cast<double>(idx(gen)));
        for (long N : {1, 5, 20})
          CHECK(std::abs(dirichlet_kernel(g, j, G, N) - 1.0) < 1e-12);
      }
    }
  }

  SECTION("hand value at A = I, N = 1, G = (pi, 0)") {
    CHECK(dirichlet_kernel(Mat2::Identity(), Vec2(pi, 0.0), 1) ==
          Catch::Approx(-1.0 / 3.0).epsilon(1e-14));
  }

  SECTION("matches the brute-force lattice sum") {
    auto gen = moire::testing::rng(22);
    std::uniform_real_distribution<double> comp(-6.0, 6.0);
    std::uniform_int_distribution<long> Ns(0, 10);
    for (int i = 0; i < 100; ++i) {
      const Vec2 G(comp(gen), comp(gen));
      const long N = Ns(gen);
      const Complex brute = kernel_brute(g.A1, G, N);
      const double closed = dirichlet_kernel(g, 1, G, N);
      CHECK(std::abs(closed - brute) <= 1e-12 * std::max(1.0, std::abs(brute)));
    }
  }

  SECTION("bounds: |delta_N| <= 1 and the per-axis sine bound") {
    auto gen = moire::testing::rng(23);
    std::uniform_real_distribution<double> comp(-8.0, 8.0);
    for (int i = 0; i < 300; ++i) {
      const Vec2 G(comp(gen), comp(gen));
      const long N = 3 + (i % 5);
      const double v = std::abs(dirichlet_kernel(g, 1, G, N));
      CHECK(v <= 1.0);
      const Vec2 t = g.A1.transpose() * G;
      for (int l = 0; l < 2; ++l) {
        const double s = std::abs(std::sin(t[l] / 2.0));
        if (s > 1e-6)
          CHECK(v <= 1.0 / ((2 * N + 1) * s) + 1e-12);
      }
    }
  }

  SECTION("Diophantine kernel bound on scanned moire frequencies") {
    const double sigma = 1.15;
    const auto scan = diophantine_scan(g, sigma, 16);
    REQUIRE(scan.K_hat > 0.0);
    for (long n1 = -16; n1 <= 16; ++n1)
      for (long n2 = -16; n2 <= 16; ++n2) {
        if (n1 == 0 && n2 == 0) continue;
        const Vec2 GM = g.B_M * Vec2(static_cast<double>(n1), static_cast<double>(n2));
        const double norm2sig = std::pow(static_cast<double>(n1 * n1 + n2 * n2), sigma);
        for (long N : {4, 16, 64}) {
          const double bound = norm2sig / (std::sqrt(2.0) * scan.K_hat * (2 * N + 1));
          for (int j : {1, 2})
            CHECK(std::abs(dirichlet_kernel(g, j, GM, N)) <= bound + 1e-12);
        }
      }
  }
}

TEST_CASE("ergodic_average") {
  const auto g = graphene_geometry(5.0);

  SECTION("constant observable averages to itself") {
    PeriodicObservable one;
    one.eval = [](const Vec2&) { return Complex(1.0, 0.0); };
    for (long N : {0, 3, 17}) CHECK(ergodic_average(g, 1, one, N) == Complex(1.0, 0.0));
  }

  SECTION("plane wave reproduces the Dirichlet kernel") {
    for (int j : {1, 2}) {
      const auto f = plane_wave(g, Index2(1, 0));
      for (long N : {1, 4, 16, 64}) {
        const Complex got = ergodic_average(g, j, f, N);
        const double want = dirichlet_kernel(g, j, g.B_M * Vec2(1, 0), N);
        CHECK(std::abs(got - want) < 1e-12);
      }
    }
  }

  SECTION("finite series matches the coefficient-weighted kernel sum") {
    const auto modes = random_hermitian_modes(2, 31);
    std::vector<FourierMode> five(modes.begin(), modes.begin() + 5);
    const auto f = fourier_observable(g, five);
    const long N = 32;
    const Complex got = ergodic_average(g, 1, f, N);
    Complex want{0, 0};
    for (const auto& m : five)
      want += m.c * dirichlet_kernel(g, 1, g.B_M * m.n.cast<double>(), N);
    CHECK(std::abs(got - want) < 1e-12);
  }

  SECTION("gamma shift only changes mode phases") {
    const auto f = plane_wave(g, Index2(2, -1));
    const Vec2 gamma(0.31, -0.17);
    const long N = 12;
    const Complex got = ergodic_average(g, 1, f, N, gamma);
    const Vec2 G = g.B_M * Vec2(2, -1);
    const double phase = G.dot(gamma);
    const Complex want = Complex(std::cos(phase), std::sin(phase)) *
                         dirichlet_kernel(g, 1, G, N);
    CHECK(std::abs(got - want) < 1e-12);
  }

  SECTION("reduction is independent of the worker count") {
    const auto f = fourier_observable(g, random_hermitian_modes(3, 33));
    const Complex base = ergodic_average(g, 1, f, 20);
    set_thread_count(4);
    const Complex par = ergodic_average(g, 1, f, 20);
    set_thread_count(1);
    CHECK(base.real() == par.real());
    CHECK(base.imag() == par.imag());
  }
}

TEST_CASE("ergodic_average_double") {
  const auto g = graphene_geometry(5.0);
  const Vec2 wM(0.4, -0.2), wL(0.1, 0.3);

  SECTION("constant") {
    DoubleObservable one;
    one.eval = [](const Vec2&, const Vec2&) { return Complex(1.0, 0.0); };
    CHECK(ergodic_average_double(g, 1, one, 5, wM, wL) == Complex(1.0, 0.0));
  }

  SECTION("marginal observable reduces to the single average") {
    const auto f = fourier_observable(g, random_hermitian_modes(2, 41));
    DoubleObservable h;
    h.eval = [&f](const Vec2& x, const Vec2&) { return f.eval(x); };
    for (long N : {3, 9})
      CHECK(std::abs(ergodic_average_double(g, 1, h, N, wM, wL) -
                     ergodic_average(g, 1, f, N, wM)) < 1e-13);
  }

  SECTION("plane-wave pair: brute force and the explicit kernel value") {
    for (int j : {1, 2}) {
      const Index2 nM(1, -2), nL(0, 1);
      const auto h = plane_wave_pair(g, j, nM, nL);
      const Vec2 GM = g.B_M * nM.cast<double>();
      const Vec2 GL = g.reciprocal_basis(3 - j) * nL.cast<double>();
      for (long N : {2, 5, 8}) {
        const Complex got = ergodic_average_double(g, j, h, N, wM, wL);

        // brute-force double loop, no shared code path
        Complex brute{0, 0};
        for (long a = -N; a <= N; ++a)
          for (long b = -N; b <= N; ++b) {
            const Vec2 R = g.layer_basis(j) *
                           Vec2(static_cast<double>(a), static_cast<double>(b));
            const double ph = GM.dot(moire_frac(g, R + wM).frac) +
                              GL.dot(layer_frac(g, R + wL, 3 - j).frac);
            brute += Complex(std::cos(ph), std::sin(ph));
          }
        brute /= static_cast<double>((2 * N + 1) * (2 * N + 1));
        CHECK(std::abs(got - brute) < 1e-12);

        // delta_N(G_L + G_M) times the offset phase
        const double ph0 = GM.dot(wM) + GL.dot(wL);
        const Complex want = Complex(std::cos(ph0), std::sin(ph0)) *
                             dirichlet_kernel(g, j, GL + GM, N);
        CHECK(std::abs(got - want) < 1e-11);
      }
    }
  }
}

TEST_CASE("limit_average quadrature") {
  const auto g = graphene_geometry(5.0);

  SECTION("constants and discrete orthogonality") {
    PeriodicObservable c;
    c.eval = [](const Vec2&) { return Complex(0.7, -0.1); };
    CHECK(std::abs(limit_average(g, c, 16) - Complex(0.7, -0.1)) < 1e-14);

    for (const Index2 n : {Index2(1, 0), Index2(3, 2), Index2(0, -5)})
      CHECK(std::abs(limit_average(g, plane_wave(g, n), 16)) < 1e-12);
  }

  SECTION("finite series integrates to its zero coefficient") {
    const auto modes = random_hermitian_modes(3, 51);
    const auto f = fourier_observable(g, modes);
    Complex c0{0, 0};
    for (const auto& m : modes)
      if (m.n == Index2(0, 0)) c0 = m.c;
    CHECK(std::abs(limit_average(g, f, 16) - c0) < 1e-12);
  }
}

TEST_CASE("limit_average_double") {
  const auto g = graphene_geometry(5.0);
  const Vec2 wM(0.4, -0.2), wL(0.1, 0.3);

  SECTION("constant and marginal reductions") {
    DoubleObservable one;
    one.eval = [](const Vec2&, const Vec2&) { return Complex(1.0, 0.0); };
    CHECK(std::abs(limit_average_double(g, 1, one, wM, wL, 12) - Complex(1.0, 0.0)) < 1e-14);

    const auto f = fourier_observable(g, random_hermitian_modes(2, 61));
    DoubleObservable h;
    h.eval = [&f](const Vec2& x, const Vec2&) { return f.eval(x); };
    CHECK(std::abs(limit_average_double(g, 1, h, wM, wL, 32) - limit_average(g, f, 32)) <
          1e-13);
  }

  SECTION("plane-wave pair selects G_M = -D^T G_layer") {
    // With G_M = B_M m and G_layer = B_{3-j} p one has D^T G_layer = -B_M p
    // (j = 1), so the cell integral vanishes unless m = p, where the value is
    // the pure offset phase.
    const int j = 1;
    const Mat2 D = disregistry_matrix(g, j);
    for (const auto& [m, p] : std::vector<std::pair<Index2, Index2>>{
             {Index2(1, 0), Index2(1, 0)},
             {Index2(1, 0), Index2(0, 1)},
             {Index2(-2, 3), Index2(-2, 3)},
             {Index2(2, 1), Index2(-1, 1)}}) {
      const auto h = plane_wave_pair(g, j, m, p);
      const Complex got = limit_average_double(g, j, h, wM, wL, 48);
      if (m == p) {
        const Vec2 GL = g.reciprocal_basis(3 - j) * p.cast<double>();
        const double ph = GL.dot(wL - D * wM);
        CHECK(std::abs(got - Complex(std::cos(ph), std::sin(ph))) < 1e-11);
      } else {
        CHECK(std::abs(got) < 1e-12);
      }
    }
  }
}

TEST_CASE("reconstruct_fourier") {
  const auto g = graphene_geometry(5.0);

  SECTION("constant field at G = 0") {
    auto u = [](const Vec2&) { return Complex(2.5, 0.5); };
    for (long N : {0, 4, 19})
      CHECK(std::abs(reconstruct_fourier(g, 1, u, Vec2::Zero(), Vec2::Zero(), N) -
                     Complex(2.5, 0.5)) < 1e-13);
  }

  SECTION("matching plane wave recovers coefficient 1 exactly") {
    const auto f = plane_wave(g, Index2(2, 1));
    const Vec2 G0 = g.B_M * Vec2(2, 1);
    for (long N : {1, 6, 20}) {
      const Complex got = reconstruct_fourier(g, 1, f.eval, G0, Vec2::Zero(), N);
      CHECK(std::abs(got - Complex(1.0, 0.0)) < 1e-12);
    }
  }

  SECTION("mismatched frequency leaks exactly the kernel") {
    const auto f = plane_wave(g, Index2(1, 1));
    const Vec2 G0 = g.B_M * Vec2(1, 1);
    const Vec2 GM = g.B_M * Vec2(0, 2);
    const Vec2 gamma(0.9, -0.4);
    for (long N : {2, 5, 8}) {
      const Complex got = reconstruct_fourier(g, 1, f.eval, GM, gamma, N);

      // brute-force sum at small N
      Complex brute{0, 0};
      for (long a = -N; a <= N; ++a)
        for (long b = -N; b <= N; ++b) {
          const Vec2 x = gamma + g.A1 * Vec2(static_cast<double>(a), static_cast<double>(b));
          const double ph = G0.dot(moire_frac(g, x).frac) - GM.dot(x);
          brute += Complex(std::cos(ph), std::sin(ph));
        }
      brute /= static_cast<double>((2 * N + 1) * (2 * N + 1));
      CHECK(std::abs(got - brute) < 1e-13);

      const double ph = (G0 - GM).dot(gamma);
      const Complex want = Complex(std::cos(ph), std::sin(ph)) *
                           dirichlet_kernel(g, 1, G0 - GM, N);
      CHECK(std::abs(got - want) < 1e-11);
    }
    // kernel leakage decays in N
    const Complex c32 = reconstruct_fourier(g, 1, f.eval, GM, gamma, 32);
    const Complex c128 = reconstruct_fourier(g, 1, f.eval, GM, gamma, 128);
    CHECK(std::abs(c128) < std::abs(c32));
  }
}

TEST_CASE("observable invariants") {
  const auto g = graphene_geometry(5.0);

  SECTION("coefficient-backed evaluation matches the direct mode sum") {
    const auto modes = random_hermitian_modes(3, 91);
    const auto f = fourier_observable(g, modes);
    REQUIRE(f.has_modes());
    CHECK(is_hermitian(f.modes));
    auto gen = moire::testing::rng(92);
    for (int i = 0; i < 100; ++i) {
      const Vec2 x = moire::testing::random_point(gen, 60.0);
      Complex direct{0, 0};
      for (const auto& m : modes) {
        const double ph = (g.B_M * m.n.cast<double>()).dot(x);
        direct += m.c * Complex(std::cos(ph), std::sin(ph));
      }
      CHECK(std::abs(f.eval(x) - direct) < 1e-10);
      CHECK(std::abs(f.eval(x).imag()) < 1e-12);  // Hermitian coefficients
    }
  }

  SECTION("non-Hermitian mode lists are detected") {
    std::vector<FourierMode> modes = {{Index2(1, 0), Complex(1.0, 0.5)}};
    CHECK_FALSE(is_hermitian(modes));
    modes.push_back({Index2(-1, 0), Complex(1.0, -0.5)});
    CHECK(is_hermitian(modes));
  }

  SECTION("double observables are periodic on the product cell") {
    const auto h = plane_wave_pair(g, 1, Index2(2, -1), Index2(1, 1));
    auto gen = moire::testing::rng(93);
    for (int i = 0; i < 50; ++i) {
      const Vec2 x = moire::testing::random_point(gen, 40.0);
      const Vec2 y = moire::testing::random_point(gen, 10.0);
      const Complex base = h.eval(x, y);
      CHECK(std::abs(h.eval(x + g.A_M * Vec2(1, -2), y) - base) < 1e-10);
      CHECK(std::abs(h.eval(x, y + g.A2 * Vec2(3, 1)) - base) < 1e-10);
    }
  }
}

TEST_CASE("ergodic averages of a bounded discontinuous observable") {
  // indicator of the quarter cell: rough but bounded; the averages still
  // approach the cell fraction, only without the Diophantine rate
  const auto g = graphene_geometry(5.0);
  PeriodicObservable f;
  const Mat2 AM_inv = g.AM_inv;
  f.eval = [AM_inv](const Vec2& x) {
    const Vec2 c = AM_inv * x;
    const double f1 = c[0] - std::floor(c[0]);
    const double f2 = c[1] - std::floor(c[1]);
    return Complex((f1 < 0.5 && f2 < 0.5) ? 1.0 : 0.0, 0.0);
  };
  const double e8 = std::abs(ergodic_average(g, 1, f, 8) - Complex(0.25, 0.0));
  const double e128 = std::abs(ergodic_average(g, 1, f, 128) - Complex(0.25, 0.0));
  CHECK(e128 < 0.01);
  CHECK(e128 < e8);
}

TEST_CASE("quantitative ergodic rate bound holds with the empirical constant") {
  const auto g = graphene_geometry(5.0);
  const double sigma = 1.15, s = 1.85;
  const auto scan = diophantine_scan(g, sigma, 64);
  REQUIRE(scan.K_hat > 0.0);

  const auto f = fourier_observable(g, random_hermitian_modes(2, 71, 0.3));
  const auto p = error_prefactor(scan, s, fourier_decay_sup(g, f, sigma, s));
  const Complex limit = limit_average(g, f, 64);

  for (long N : {16, 32, 64, 128}) {
    const double err = std::abs(ergodic_average(g, 1, f, N) - limit);
    CHECK(err <= p.bound(N));
  }
}
