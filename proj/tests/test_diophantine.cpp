#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "moire/diophantine.hpp"

using namespace moire;
using moire::testing::graphene_geometry;

TEST_CASE("riemann_zeta matches closed forms") {
  CHECK(riemann_zeta(2.0) == Catch::Approx(pi * pi / 6.0).epsilon(1e-13));
  CHECK(riemann_zeta(4.0) == Catch::Approx(pi * pi * pi * pi / 90.0).epsilon(1e-13));
  CHECK(riemann_zeta(6.0) == Catch::Approx(std::pow(pi, 6) / 945.0).epsilon(1e-13));
  // brute series oracle at s = 1.3 (slowly convergent; compare against a
  // 10^7-term partial sum plus integral tail)
  const double s = 1.3;
  double partial = 0.0;
  const long K = 200000;
  for (long k = 1; k <= K; ++k) partial += std::pow(static_cast<double>(k), -s);
  const double tail = std::pow(static_cast<double>(K), 1.0 - s) / (s - 1.0) -
                      0.5 * std::pow(static_cast<double>(K), -s);
  CHECK(riemann_zeta(s) == Catch::Approx(partial + tail).epsilon(1e-10));
  CHECK_THROWS_AS(riemann_zeta(1.0), DivergentTail);
}

TEST_CASE("diophantine_distance") {
  SECTION("commensurate inputs give zero") {
    const auto g = primitive_geometry(Mat2::Identity(), 0.0, 1.0);
    CHECK(diophantine_distance(g, Index2(1, 0), +1) == 0.0);
    CHECK(diophantine_distance(g, Index2(3, -2), -1) == 0.0);
  }

  SECTION("quarter turn maps (1,0) into the integer lattice") {
    const auto g = build_geometry(Mat2::Identity(), pi / 2.0, 1.0);
    CHECK(diophantine_distance(g, Index2(1, 0), +1) < 1e-12);
  }

  SECTION("brute-force nearest-integer oracle") {
    const auto g = graphene_geometry(5.0);
    const Mat2 M = g.q * g.A.transpose() * rotation(g.theta) * g.A.inverse().transpose();
    auto gen = moire::testing::rng(11);
    std::uniform_int_distribution<long> idx(-20, 20);
    for (int i = 0; i < 200; ++i) {
      Index2 n(idx(gen), idx(gen));
      if (n[0] == 0 && n[1] == 0) n = Index2(1, 0);
      const Vec2 image = M * n.cast<double>();
      double best = std::numeric_limits<double>::infinity();
      for (long m1 = -50; m1 <= 50; ++m1)
        for (long m2 = -50; m2 <= 50; ++m2)
          best = std::min(best, (image - Vec2(static_cast<double>(m1),
                                              static_cast<double>(m2))).norm());
      CHECK(diophantine_distance(g, n, +1) == Catch::Approx(best).margin(1e-14));
    }
    CHECK(diophantine_distance(g, Index2(1, 0), +1) > 0.0);
  }

  SECTION("distance never exceeds the per-coordinate half cell") {
    const auto g = graphene_geometry(7.31, 1.13);
    auto gen = moire::testing::rng(12);
    std::uniform_int_distribution<long> idx(-64, 64);
    for (int i = 0; i < 500; ++i) {
      Index2 n(idx(gen), idx(gen));
      if (n[0] == 0 && n[1] == 0) continue;
      for (int sign : {+1, -1})
        CHECK(diophantine_distance(g, n, sign) <= std::sqrt(0.5) + 1e-12);
    }
  }
}

TEST_CASE("diophantine_scan") {
  SECTION("theta = 0 is commensurate with witness (1,0)") {
    const auto g = primitive_geometry(Mat2::Identity(), 0.0, 1.0);
    const auto scan = diophantine_scan(g, 1.15, 8);
    CHECK(scan.K_hat == 0.0);
    CHECK(scan.commensurate());
    CHECK(scan.argmin_n == Index2(1, 0));
  }

  SECTION("graphene at 5 degrees is empirically Diophantine") {
    const auto g = graphene_geometry(5.0);
    const auto scan = diophantine_scan(g, 1.15, 64);
    CHECK(scan.K_hat > 0.0);
    CHECK_FALSE(scan.commensurate());

    // nested-scan monotonicity: minimum over a larger set cannot grow
    const auto wider = diophantine_scan(g, 1.15, 128);
    CHECK(wider.K_hat <= scan.K_hat);

    // K_hat nondecreasing in sigma (all scanned |n| >= 1)
    const auto steeper = diophantine_scan(g, 1.5, 64);
    CHECK(steeper.K_hat >= scan.K_hat);
  }

  SECTION("exact replay: every scanned n obeys dist >= K_hat / |n|^{2 sigma}") {
    const auto g = graphene_geometry(5.0);
    std::vector<DiophantineRow> rows;
    const auto scan = diophantine_scan(g, 1.15, 24, &rows);
    REQUIRE_FALSE(rows.empty());
    CHECK(rows.size() == 2 * (49 * 49 - 1));
    for (const auto& row : rows) {
      const double norm2sig =
          std::pow(static_cast<double>(row.n.squaredNorm()), scan.sigma);
      CHECK(row.dist >= scan.K_hat / norm2sig - 1e-15);
      CHECK(row.weighted == Catch::Approx(norm2sig * row.dist).epsilon(1e-14));
    }
  }
}

TEST_CASE("zeta_tail_bound") {
  const auto g = graphene_geometry(5.0);

  SECTION("closed-form check at s = 2") {
    const double factor = moire_scale(g) * spectral_norm(g.A) / (2 * pi);
    const double tail = pi * pi * pi * pi / 90.0 + 0.25 * std::pow(pi * pi / 6.0, 2);
    CHECK(tail == Catch::Approx(1.758775).epsilon(1e-6));
    CHECK(zeta_tail_bound(g, 2.0) ==
          Catch::Approx(4.0 * std::pow(factor, 4) * tail).epsilon(1e-13));
  }

  SECTION("upper-bounds the truncated direct lattice sum") {
    for (double s : {1.3, 1.85, 2.5}) {
      double direct = 0.0;
      for (long n1 = -200; n1 <= 200; ++n1)
        for (long n2 = -200; n2 <= 200; ++n2) {
          if (n1 == 0 && n2 == 0) continue;
          const Vec2 G = g.B_M * Vec2(static_cast<double>(n1), static_cast<double>(n2));
          direct += std::pow(G.squaredNorm(), -s);
        }
      CHECK(direct <= zeta_tail_bound(g, s));
    }
  }

  SECTION("diverges at s <= 1") {
    CHECK_THROWS_AS(zeta_tail_bound(g, 1.0), DivergentTail);
    CHECK_THROWS_AS(zeta_tail_bound(g, 0.5), DivergentTail);
  }
}

TEST_CASE("error_prefactor") {
  const auto g = graphene_geometry(5.0);
  const auto scan = diophantine_scan(g, 1.15, 64);

  SECTION("zero Fourier sup gives zero bound") {
    CHECK(error_prefactor(scan, 1.85, 0.0).C == 0.0);
  }

  SECTION("linearity and K scaling") {
    const auto p1 = error_prefactor(scan, 1.85, 1.0);
    const auto p2 = error_prefactor(scan, 1.85, 2.0);
    CHECK(p2.C == Catch::Approx(2.0 * p1.C).epsilon(1e-14));

    auto doubled = scan;
    doubled.K_hat *= 2.0;
    CHECK(error_prefactor(doubled, 1.85, 1.0).C == Catch::Approx(0.5 * p1.C).epsilon(1e-14));
  }

  SECTION("hand formula for a single plane wave") {
    const double sigma = 1.15, s = 1.85;
    const Vec2 G = g.B_M * Vec2(1, 0);
    const double sup = std::pow(G.norm(), 2.0 * (sigma + s));  // |fhat| = 1
    const auto p = error_prefactor(scan, s, sup);
    // independent re-evaluation of def formula
    const double rho = moire_scale(g);
    const double normA = g.A.jacobiSvd().singularValues()(0);
    const double want = 2.0 * std::sqrt(2.0) / scan.K_hat *
                        std::pow(rho * normA / (2 * pi), 2.0 * (sigma + s)) *
                        (riemann_zeta(2 * s) +
                         std::pow(2.0, -s) * std::pow(riemann_zeta(s), 2)) *
                        sup;
    CHECK(p.C == Catch::Approx(want).epsilon(1e-13));
    CHECK(p.bound(10) == Catch::Approx(want / 21.0).epsilon(1e-13));
  }

  SECTION("commensurate scan is rejected") {
    const auto flat = diophantine_scan(primitive_geometry(Mat2::Identity(), 0.0, 1.0), 1.15, 4);
    CHECK_THROWS_AS(error_prefactor(flat, 1.85, 1.0), NotDiophantine);
  }
}

TEST_CASE("pair_upper_bound minimizes over the sigma grid") {
  const auto g = graphene_geometry(5.0);
  const auto pb = pair_upper_bound(g, 24);
  CHECK(pb.value > 0.0);
  CHECK(std::isfinite(pb.value));
  CHECK(pb.sigma_star > 1433.0 / 1248.0);
  CHECK(pb.sigma_star < 2.0);

  // replay: evaluating the objective at sigma_star reproduces the minimum
  std::vector<DiophantineRow> rows;
  diophantine_scan(g, pb.sigma_star, 24, &rows);
  double kappa = std::numeric_limits<double>::infinity();
  for (const auto& row : rows)
    kappa = std::min(kappa, std::pow(static_cast<double>(row.n.squaredNorm()),
                                     pb.sigma_star) *
                                row.dist);
  CHECK(kappa == Catch::Approx(pb.kappa_star).epsilon(1e-12));
  const double s = 3.0 - pb.sigma_star;
  const double obj = (riemann_zeta(6.0 - 2.0 * pb.sigma_star) +
                      std::pow(2.0, pb.sigma_star - 3.0) * std::pow(riemann_zeta(s), 2)) /
                     kappa;
  CHECK(obj == Catch::Approx(pb.value).epsilon(1e-12));
}
