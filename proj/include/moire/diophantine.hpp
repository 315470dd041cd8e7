#pragma once

#include <limits>
#include <vector>

#include "moire/geometry.hpp"
#include "moire/zeta.hpp"

namespace moire {

/// Euclidean distance from q^{sign} A^T R_{sign*theta} A^{-T} n to the
/// nearest integer vector.  Quantifies how far the twisted reciprocal image
/// of n is from a commensuration.
inline double diophantine_distance(const BilayerGeometry& g, const Index2& n, int sign) {
  if (n[0] == 0 && n[1] == 0)
    throw ValidationError("diophantine_distance: n must be nonzero");
  const double qs = (sign >= 0) ? g.q : 1.0 / g.q;
  const double th = (sign >= 0) ? g.theta : -g.theta;
  const Mat2 M = qs * g.A.transpose() * rotation(th) * g.A.inverse().transpose();
  const Vec2 image = M * n.cast<double>();
  const Vec2 r(image[0] - std::round(image[0]), image[1] - std::round(image[1]));
  return r.norm();
}

struct DiophantineRow {
  Index2 n;
  int sign;        // +1 or -1
  double dist;     // distance to Z^2
  double weighted; // |n|^{2 sigma} * dist
};

/// Result of the exhaustive Diophantine-constant scan.  K_hat is an
/// empirical (n_max-limited) surrogate for the constant K of the Diophantine
/// 2D-rotation condition dist >= K / |n|^{2 sigma}.
struct DiophantineScan {
  double sigma = 0.0;
  long n_max = 0;
  double K_hat = 0.0;
  Index2 argmin_n = Index2::Zero();
  int argmin_sign = +1;
  double K_hat_plus = 0.0, K_hat_minus = 0.0;
  Index2 argmin_plus = Index2::Zero(), argmin_minus = Index2::Zero();
  // rho_M * ||A||_2 / (2 pi); NaN for degenerate (commensurate-limit) input
  double rho_norm_factor = std::numeric_limits<double>::quiet_NaN();

  bool commensurate() const { return K_hat == 0.0; }
  static constexpr const char* provenance() { return "empirical (n_max-limited)"; }
};

namespace detail {

inline bool prefer_index(const Index2& a, const Index2& b) {
  // smaller |n|^2 first, then lexicographically larger entries
  const long na = a[0] * a[0] + a[1] * a[1];
  const long nb = b[0] * b[0] + b[1] * b[1];
  if (na != nb) return na < nb;
  if (a[0] != b[0]) return a[0] > b[0];
  return a[1] > b[1];
}

}  // namespace detail

/// Exhaustive scan over 0 < |n|_inf <= n_max and both signs.
/// K_hat = min |n|^{2 sigma} dist; rows (for CSV emission) are appended to
/// *rows when given.  Deterministic regardless of partitioning: the reduction
/// is a min with a canonical tie-break.
inline DiophantineScan diophantine_scan(const BilayerGeometry& g, double sigma, long n_max,
                                        std::vector<DiophantineRow>* rows = nullptr) {
  if (!(sigma > 1.0)) throw ValidationError("diophantine_scan: sigma must be > 1");
  if (n_max < 1) throw ValidationError("diophantine_scan: n_max must be >= 1");

  DiophantineScan scan;
  scan.sigma = sigma;
  scan.n_max = n_max;
  try {
    scan.rho_norm_factor = moire_scale(g) * spectral_norm(g.A) / (2.0 * pi);
  } catch (const DegenerateScale&) {
    // commensurate limit; K_hat will be 0 and no prefactor is defined
  }

  struct Best {
    double w = std::numeric_limits<double>::infinity();
    Index2 n = Index2::Zero();
    bool better(double wi, const Index2& ni) const {
      if (wi != w) return wi < w;
      return detail::prefer_index(ni, n);
    }
  };
  Best best_plus, best_minus;

  for (long n1 = -n_max; n1 <= n_max; ++n1) {
    for (long n2 = -n_max; n2 <= n_max; ++n2) {
      if (n1 == 0 && n2 == 0) continue;
      const Index2 n(n1, n2);
      const double norm2sig =
          std::pow(static_cast<double>(n1 * n1 + n2 * n2), sigma);
      for (int sign : {+1, -1}) {
        const double d = diophantine_distance(g, n, sign);
        const double w = norm2sig * d;
        Best& b = (sign > 0) ? best_plus : best_minus;
        if (b.better(w, n)) {
          b.w = w;
          b.n = n;
        }
        if (rows) rows->push_back({n, sign, d, w});
      }
    }
  }

  scan.K_hat_plus = best_plus.w;
  scan.argmin_plus = best_plus.n;
  scan.K_hat_minus = best_minus.w;
  scan.argmin_minus = best_minus.n;
  if (best_plus.w < best_minus.w ||
      (best_plus.w == best_minus.w && detail::prefer_index(best_plus.n, best_minus.n))) {
    scan.K_hat = best_plus.w;
    scan.argmin_n = best_plus.n;
    scan.argmin_sign = +1;
  } else {
    scan.K_hat = best_minus.w;
    scan.argmin_n = best_minus.n;
    scan.argmin_sign = -1;
  }
  return scan;
}

/// 4 (rho_M ||A||_2 / 2 pi)^{2s} (zeta(2s) + 2^{-s} zeta(s)^2): an upper
/// bound for sum_{G_M != 0} |G_M|^{-2s} over the moire reciprocal lattice.
inline double zeta_tail_bound(const BilayerGeometry& g, double s) {
  if (!(s > 1.0)) throw DivergentTail("zeta_tail_bound: requires s > 1");
  const double factor = moire_scale(g) * spectral_norm(g.A) / (2.0 * pi);
  return 4.0 * std::pow(factor, 2.0 * s) * zeta_tail_factor(s);
}

/// Quantitative ergodic-rate prefactor: |A_N(f) - avg f| <= C / (2N+1).
struct ErrorPrefactor {
  double sigma = 0.0;
  double s = 0.0;
  double K = 0.0;
  double fourier_decay_sup = 0.0;  // sup_{G_M} |G_M|^{2(sigma+s)} |fhat(G_M)|
  double C = 0.0;
  long n_max = 0;

  double bound(long N) const { return C / static_cast<double>(2 * N + 1); }
};

inline ErrorPrefactor error_prefactor(const DiophantineScan& scan, double s,
                                      double fourier_decay_sup) {
  if (!(scan.K_hat > 0.0))
    throw NotDiophantine("error_prefactor: scan found K_hat = 0 (commensuration witness)");
  if (!(s > 1.0)) throw DivergentTail("error_prefactor: requires s > 1");
  if (fourier_decay_sup < 0.0)
    throw ValidationError("error_prefactor: fourierDecaySup must be >= 0");
  ErrorPrefactor p;
  p.sigma = scan.sigma;
  p.s = s;
  p.K = scan.K_hat;
  p.fourier_decay_sup = fourier_decay_sup;
  p.n_max = scan.n_max;
  p.C = 2.0 * std::sqrt(2.0) / scan.K_hat *
        std::pow(scan.rho_norm_factor, 2.0 * (scan.sigma + s)) * zeta_tail_factor(s) *
        fourier_decay_sup;
  return p;
}

/// Pair-potential rate surrogate M^(pair)(theta): minimum over a 32-point
/// sigma grid on (1433/1248, 2) of (zeta(6-2sigma) + 2^{sigma-3}
/// zeta(3-sigma)^2) / kappa_hat(sigma), with kappa_hat taken from the same
/// finite scan as K_hat.  The exact infimum is not computable.
struct PairBound {
  double value = 0.0;
  double sigma_star = 0.0;
  double kappa_star = 0.0;
  long n_max = 0;
};

/// n-th Bell number via the Bell triangle (the pair-rate constant uses B_6).
inline double bell_number(int n) {
  std::vector<double> row{1.0};
  for (int i = 1; i <= n; ++i) {
    std::vector<double> next(static_cast<size_t>(i) + 1);
    next[0] = row.back();
    for (size_t k = 1; k < next.size(); ++k) next[k] = next[k - 1] + row[k - 1];
    row = std::move(next);
  }
  return row.front();
}

inline PairBound pair_upper_bound(const BilayerGeometry& g, long n_max) {
  constexpr double sigma_lo = 1433.0 / 1248.0;
  constexpr double sigma_hi = 2.0;
  constexpr int grid = 32;

  // one pass over the lattice, min-reduce per sigma
  std::vector<double> kappa(grid, std::numeric_limits<double>::infinity());
  std::vector<double> sigmas(grid);
  for (int i = 0; i < grid; ++i)
    sigmas[i] = sigma_lo + (sigma_hi - sigma_lo) * (i + 0.5) / grid;

  for (long n1 = -n_max; n1 <= n_max; ++n1) {
    for (long n2 = -n_max; n2 <= n_max; ++n2) {
      if (n1 == 0 && n2 == 0) continue;
      const Index2 n(n1, n2);
      const double norm2 = static_cast<double>(n1 * n1 + n2 * n2);
      const double d = std::min(diophantine_distance(g, n, +1),
                                diophantine_distance(g, n, -1));
      for (int i = 0; i < grid; ++i) {
        const double w = std::pow(norm2, sigmas[i]) * d;
        if (w < kappa[i]) kappa[i] = w;
      }
    }
  }

  PairBound out;
  out.n_max = n_max;
  out.value = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    if (!(kappa[i] > 0.0)) throw NotDiophantine("pair_upper_bound: commensuration witness");
    const double s = 3.0 - sigmas[i];
    const double v = (riemann_zeta(6.0 - 2.0 * sigmas[i]) +
                      std::pow(2.0, sigmas[i] - 3.0) * riemann_zeta(s) * riemann_zeta(s)) /
                     kappa[i];
    if (v < out.value) {
      out.value = v;
      out.sigma_star = sigmas[i];
      out.kappa_star = kappa[i];
    }
  }
  return out;
}

}  // namespace moire
