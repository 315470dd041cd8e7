#pragma once

#include "moire/diophantine.hpp"
#include "moire/energy.hpp"

namespace moire {

/// Assembled convergence-rate constant for interlayer pair potentials:
/// |e_N - e| <= C / (2N+1) with
///   C = B6 sqrt(2) / (|G1||G2|) (rho_M ||A|| / 2 pi)^6 M(theta)
///       (q^6 + q^{-6} + 1) 2 5^{r-1} pi/(r-1)
///       (1 + d + ||u1||_{W6inf} + ||u2||_{W6inf})^{6+2r} sum ||v||_{W6inf_2r}.
/// Every ingredient here is an estimate: M(theta) comes from a finite scan,
/// the u norms from coefficient sums, and the weighted Sobolev norm of v
/// from directional finite-difference probes.
struct PairRateConstant {
  double C = 0.0;
  double M_pair = 0.0;
  double sigma_star = 0.0;
  double v_norm_estimate = 0.0;
  double u1_norm_bound = 0.0;
  double u2_norm_bound = 0.0;
  long n_max = 0;
  static constexpr const char* provenance() {
    return "upper-bound estimate (finite scan; derivative norms probed numerically)";
  }
};

namespace detail {

/// Coefficient-sum bound on ||u||_{W^{6,inf}} = sum_k ||D^k u||_inf.
inline double sobolev_bound(const DisplacementField& u) {
  double worst = 0.0;
  for (int alpha = 0; alpha < u.sublattice_count(); ++alpha) {
    double total = 0.0;
    for (const auto& m : u.modes(alpha)) {
      const double Gn = (u.frequency_basis() * m.n.cast<double>()).norm();
      double geom = 1.0;  // sum_k |G|^k
      double pw = 1.0;
      for (int k = 1; k <= 6; ++k) {
        pw *= Gn;
        geom += pw;
      }
      total += m.c.norm() * geom;
    }
    worst = std::max(worst, total);
  }
  return worst;
}

/// sum_{k<=6} sup <x_h>^{2r} |D^k v| probed along radial directions with
/// central finite differences of order k.
inline double weighted_sobolev_estimate(const PairPotential& v, double r, double z_center,
                                        double z_halfwidth, int grid = 96,
                                        double r_max = 24.0) {
  // binomial stencils for the k-th central difference
  const double h = 0.08;
  auto deriv_along = [&](const Vec3& base, const Vec3& dir, int k) {
    double acc = 0.0;
    double sign = 1.0;
    double binom = 1.0;
    for (int i = 0; i <= k; ++i) {
      const double offset = (static_cast<double>(k) / 2.0 - i) * h;
      acc += sign * binom * v.evaluate(base + offset * dir);
      binom = binom * (k - i) / (i + 1.0);
      sign = -sign;
    }
    return acc / std::pow(h, k);
  };

  double total = 0.0;
  for (int k = 0; k <= 6; ++k) {
    double sup = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double rh = r_max * i / (grid - 1);
      const double weight = std::pow(1.0 + rh * rh, r);
      for (int zi = 0; zi < 5; ++zi) {
        const double z = z_halfwidth == 0.0
                             ? z_center
                             : z_center - z_halfwidth + 2.0 * z_halfwidth * zi / 4.0;
        const Vec3 base(rh, 0.0, z);
        const double radial = std::abs(deriv_along(base, Vec3(1, 0, 0), k));
        const double vertical = std::abs(deriv_along(base, Vec3(0, 0, 1), k));
        sup = std::max(sup, weight * std::max(radial, vertical));
      }
    }
    total += sup;
  }
  return total;
}

}  // namespace detail

inline PairRateConstant estimate_pair_rate_constant(const BilayerGeometry& g,
                                                    const SublatticeSpec& subl,
                                                    const PairPotential& v,
                                                    const DisplacementField& u1,
                                                    const DisplacementField& u2, double r,
                                                    long n_max, double z_center,
                                                    double z_halfwidth) {
  if (!(r > 1.0)) throw ValidationError("estimate_pair_rate_constant: requires r > 1");
  PairRateConstant out;
  out.n_max = n_max;
  const auto pb = pair_upper_bound(g, n_max);
  out.M_pair = pb.value;
  out.sigma_star = pb.sigma_star;
  out.u1_norm_bound = detail::sobolev_bound(u1);
  out.u2_norm_bound = detail::sobolev_bound(u2);
  out.v_norm_estimate =
      detail::weighted_sobolev_estimate(v, r, z_center, z_halfwidth);
  const double d = subl.sublattice_distance();
  const double pairs = static_cast<double>(subl.layer1.size() * subl.layer2.size());

  const double rho_factor = moire_scale(g) * spectral_norm(g.A) / (2.0 * pi);
  const double q6 = std::pow(g.q, 6);
  // the <x>^{-2r} plane integral evaluates to pi/(r-1), giving the
  // 2 * 5^{r-1} pi/(r-1) shift-lemma factor
  const double shift_factor = 2.0 * std::pow(5.0, r - 1.0) * pi / (r - 1.0);
  out.C = bell_number(6) * std::sqrt(2.0) / (g.area_gamma1 * g.area_gamma2) *
          std::pow(rho_factor, 6) * pb.value * (q6 + 1.0 / q6 + 1.0) * shift_factor *
          std::pow(1.0 + d + out.u1_norm_bound + out.u2_norm_bound, 6.0 + 2.0 * r) *
          pairs * out.v_norm_estimate;
  return out;
}

}  // namespace moire
