#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "moire/core.hpp"

namespace moire {

/// Radial profile with first derivative; building block of the pair
/// potentials (full 3D radius, horizontal radius, or |z| profile).
class RadialRule {
 public:
  virtual ~RadialRule() = default;
  virtual double value(double r) const = 0;
  virtual double deriv(double r) const = 0;
  virtual double deriv2(double r) const {
    const double h = 1e-6 * std::max(1.0, std::abs(r));
    return (deriv(r + h) - deriv(r - h)) / (2.0 * h);
  }
};

using RadialRulePtr = std::shared_ptr<const RadialRule>;

/// Morse well: E0 [(e^{-kappa0 (r - r0)} - 1)^2 - 1].
class MorseRule final : public RadialRule {
 public:
  MorseRule(double E0, double kappa0, double r0) : E0_(E0), kappa0_(kappa0), r0_(r0) {}
  double value(double r) const override {
    const double u = std::exp(-kappa0_ * (r - r0_));
    return E0_ * ((u - 1.0) * (u - 1.0) - 1.0);
  }
  double deriv(double r) const override {
    const double u = std::exp(-kappa0_ * (r - r0_));
    return E0_ * 2.0 * (u - 1.0) * (-kappa0_) * u;
  }
  double deriv2(double r) const override {
    const double u = std::exp(-kappa0_ * (r - r0_));
    return E0_ * 2.0 * kappa0_ * kappa0_ * u * (2.0 * u - 1.0);
  }

 private:
  double E0_, kappa0_, r0_;
};

/// 12-6 Lennard-Jones: 4 eps0 [(sigma/r)^12 - (sigma/r)^6].
class LennardJonesRule final : public RadialRule {
 public:
  LennardJonesRule(double eps0, double sigma) : eps0_(eps0), sigma_(sigma) {}
  double value(double r) const override {
    const double s6 = std::pow(sigma_ / r, 6);
    return 4.0 * eps0_ * (s6 * s6 - s6);
  }
  double deriv(double r) const override {
    const double s6 = std::pow(sigma_ / r, 6);
    return 4.0 * eps0_ * (-12.0 * s6 * s6 + 6.0 * s6) / r;
  }
  double deriv2(double r) const override {
    const double s6 = std::pow(sigma_ / r, 6);
    return 4.0 * eps0_ * (156.0 * s6 * s6 - 42.0 * s6) / (r * r);
  }

 private:
  double eps0_, sigma_;
};

/// amplitude * exp(-(r/width)^2); the smooth test profile.
class GaussianRule final : public RadialRule {
 public:
  GaussianRule(double amplitude, double width) : a_(amplitude), w_(width) {}
  double value(double r) const override { return a_ * std::exp(-(r * r) / (w_ * w_)); }
  double deriv(double r) const override { return value(r) * (-2.0 * r / (w_ * w_)); }
  double deriv2(double r) const override {
    return value(r) * (4.0 * r * r / (w_ * w_ * w_ * w_) - 2.0 / (w_ * w_));
  }

 private:
  double a_, w_;
};

/// Cubic local interpolation of (r, value) samples; even reflection across
/// r = 0 and zero extension past the table end.
class TabulatedRule final : public RadialRule {
 public:
  TabulatedRule(std::vector<double> radii, std::vector<double> values, int order = 3)
      : r_(std::move(radii)), v_(std::move(values)), order_(order) {
    if (r_.size() != v_.size() || r_.size() < 2)
      throw ValidationError("TabulatedRule: need matching radius/value columns (>= 2 rows)");
    for (size_t i = 1; i < r_.size(); ++i)
      if (!(r_[i] > r_[i - 1]))
        throw ValidationError("TabulatedRule: radii must be strictly increasing");
    if (!(r_.front() >= 0.0)) throw ValidationError("TabulatedRule: radii must be >= 0");
    if (order_ != 1 && order_ != 3)
      throw ValidationError("TabulatedRule: interpolation order must be 1 or 3");
  }

  double value(double r) const override { return interpolate(std::abs(r), false); }
  double deriv(double r) const override {
    const double s = r < 0.0 ? -1.0 : 1.0;
    return s * interpolate(std::abs(r), true);
  }
  double support_radius() const { return r_.back(); }

 private:
  // sample the even extension at arbitrary radius
  double sample(long i) const {
    if (i < 0) i = -i;  // clamped-even mirror through 0
    if (i >= static_cast<long>(r_.size())) return 0.0;  // zero extension
    return v_[static_cast<size_t>(i)];
  }
  double node(long i) const {
    if (i < 0) return 2.0 * r_.front() - r_[static_cast<size_t>(-i)];
    if (i >= static_cast<long>(r_.size()))
      return r_.back() + (i - static_cast<long>(r_.size()) + 1) *
                             (r_.back() - r_[r_.size() - 2]);
    return r_[static_cast<size_t>(i)];
  }

  double interpolate(double r, bool want_deriv) const {
    if (r > r_.back()) return 0.0;
    auto it = std::upper_bound(r_.begin(), r_.end(), r);
    long k = std::max<long>(0, (it - r_.begin()) - 1);
    if (order_ == 1) {
      const double t = (r - node(k)) / (node(k + 1) - node(k));
      if (want_deriv) return (sample(k + 1) - sample(k)) / (node(k + 1) - node(k));
      return (1.0 - t) * sample(k) + t * sample(k + 1);
    }
    // 4-point Lagrange on nodes k-1..k+2
    double acc = 0.0;
    for (long i = k - 1; i <= k + 2; ++i) {
      double term = want_deriv ? 0.0 : 1.0;
      if (!want_deriv) {
        for (long m = k - 1; m <= k + 2; ++m)
          if (m != i) term *= (r - node(m)) / (node(i) - node(m));
      } else {
        for (long d = k - 1; d <= k + 2; ++d) {
          if (d == i) continue;
          double prod = 1.0;
          for (long m = k - 1; m <= k + 2; ++m)
            if (m != i && m != d) prod *= (r - node(m)) / (node(i) - node(m));
          term += prod / (node(i) - node(d));
        }
      }
      acc += term * sample(i);
    }
    return acc;
  }

  std::vector<double> r_, v_;
  int order_;
};

/// Replaces the profile below rho_core by the even C^2 polynomial
/// a + b r^2 + c r^4 matching value and first two derivatives at rho_core.
class CoreRegularizedRule final : public RadialRule {
 public:
  CoreRegularizedRule(RadialRulePtr inner, double rho_core)
      : inner_(std::move(inner)), rho_(rho_core) {
    if (!(rho_ > 0.0)) throw ValidationError("core regularization radius must be positive");
    const double f = inner_->value(rho_);
    const double f1 = inner_->deriv(rho_);
    const double f2 = inner_->deriv2(rho_);
    c_ = (f2 * rho_ - f1) / (8.0 * rho_ * rho_ * rho_);
    b_ = f1 / (2.0 * rho_) - 2.0 * c_ * rho_ * rho_;
    a_ = f - b_ * rho_ * rho_ - c_ * rho_ * rho_ * rho_ * rho_;
  }

  double value(double r) const override {
    r = std::abs(r);
    if (r >= rho_) return inner_->value(r);
    const double r2 = r * r;
    return a_ + b_ * r2 + c_ * r2 * r2;
  }
  double deriv(double r) const override {
    const double s = r < 0.0 ? -1.0 : 1.0;
    r = std::abs(r);
    if (r >= rho_) return s * inner_->deriv(r);
    return s * (2.0 * b_ * r + 4.0 * c_ * r * r * r);
  }
  double deriv2(double r) const override {
    r = std::abs(r);
    if (r >= rho_) return inner_->deriv2(r);
    return 2.0 * b_ + 12.0 * c_ * r * r;
  }

 private:
  RadialRulePtr inner_;
  double rho_, a_ = 0, b_ = 0, c_ = 0;
};

inline RadialRulePtr core_regularized(RadialRulePtr inner, double rho_core) {
  if (rho_core <= 0.0) return inner;
  return std::make_shared<CoreRegularizedRule>(std::move(inner), rho_core);
}

/// Even interlayer pair potential v : R^3 -> energy with decay metadata.
/// Shipped variants are functions of |x_horizontal| and |z| (so evenness is
/// structural) and are finite everywhere after core regularization.
class PairPotential {
 public:
  double evaluate(const Vec3& x) const { return value_(x); }
  Vec3 gradient(const Vec3& x) const { return grad_(x); }
  double decay_exponent() const { return decay_r_; }
  const std::string& name() const { return name_; }

  /// Morse radial in the full 3D distance.
  static PairPotential morse(double E0, double kappa0, double r0, double core_radius = 0.5,
                             double decay_r = 1.5) {
    return radial3d(core_regularized(std::make_shared<MorseRule>(E0, kappa0, r0), core_radius),
                    decay_r, "morse");
  }

  /// Lennard-Jones radial in the full 3D distance.
  static PairPotential lennard_jones(double eps0, double sigma, double core_radius = 0.5,
                                     double decay_r = 2.5) {
    return radial3d(
        core_regularized(std::make_shared<LennardJonesRule>(eps0, sigma), core_radius),
        decay_r, "lennard_jones");
  }

  /// Gaussian test potential, radial in the full 3D distance.
  static PairPotential gaussian(double amplitude, double width, double decay_r = 8.0) {
    return radial3d(std::make_shared<GaussianRule>(amplitude, width), decay_r, "gaussian");
  }

  /// Separable horizontal x vertical profile v(x) = h(|x_xy|) w(|z|).
  static PairPotential product_xy_z(RadialRulePtr horizontal, RadialRulePtr vertical,
                                    double core_radius = 0.5, double decay_r = 1.5,
                                    std::string name = "product_xy_z") {
    auto h = core_regularized(std::move(horizontal), core_radius);
    auto w = core_regularized(std::move(vertical), core_radius);
    PairPotential p;
    p.name_ = std::move(name);
    p.decay_r_ = decay_r;
    p.value_ = [h, w](const Vec3& x) {
      return h->value(std::hypot(x[0], x[1])) * w->value(std::abs(x[2]));
    };
    p.grad_ = [h, w](const Vec3& x) {
      const double rh = std::hypot(x[0], x[1]);
      const double hz = w->value(std::abs(x[2]));
      Vec3 gout = Vec3::Zero();
      if (rh > 0.0) {
        const double dh = h->deriv(rh) * hz / rh;
        gout[0] = dh * x[0];
        gout[1] = dh * x[1];
      }
      gout[2] = h->value(rh) * w->deriv(std::abs(x[2])) * (x[2] < 0.0 ? -1.0 : 1.0);
      return gout;
    };
    return p;
  }

  /// Tabulated radial profile in the full 3D distance.
  static PairPotential tabulated(std::vector<double> radii, std::vector<double> values,
                                 int order = 3, double core_radius = 0.0,
                                 double decay_r = 1.5) {
    return radial3d(core_regularized(
                        std::make_shared<TabulatedRule>(std::move(radii), std::move(values),
                                                        order),
                        core_radius),
                    decay_r, "tabulated");
  }

  /// Arbitrary even profile (used by tests).
  static PairPotential custom(std::function<double(const Vec3&)> value,
                              std::function<Vec3(const Vec3&)> grad, double decay_r,
                              std::string name = "custom") {
    PairPotential p;
    p.value_ = std::move(value);
    p.grad_ = std::move(grad);
    p.decay_r_ = decay_r;
    p.name_ = std::move(name);
    return p;
  }

  static PairPotential radial3d(RadialRulePtr rule, double decay_r, std::string name) {
    PairPotential p;
    p.name_ = std::move(name);
    p.decay_r_ = decay_r;
    p.value_ = [rule](const Vec3& x) { return rule->value(x.norm()); };
    p.grad_ = [rule](const Vec3& x) {
      const double r = x.norm();
      if (r == 0.0) return Vec3(Vec3::Zero());
      return Vec3((rule->deriv(r) / r) * x);
    };
    return p;
  }

 private:
  std::function<double(const Vec3&)> value_;
  std::function<Vec3(const Vec3&)> grad_;
  double decay_r_ = 1.5;
  std::string name_ = "custom";
};

namespace detail {

// max |v| over the horizontal annulus [r_lo, r_hi] with z probed on
// [z_center - z_limit, z_center + z_limit]
inline double annulus_max(const PairPotential& v, double r_lo, double r_hi, double z_limit,
                          int radial_samples, int z_samples, double z_center = 0.0) {
  static const Vec2 azimuths[4] = {Vec2(1, 0), Vec2(0, 1), Vec2(std::sqrt(0.5), std::sqrt(0.5)),
                                   Vec2(std::sqrt(0.5), -std::sqrt(0.5))};
  double worst = 0.0;
  for (int i = 0; i < radial_samples; ++i) {
    const double t = radial_samples == 1 ? 0.0 : static_cast<double>(i) / (radial_samples - 1);
    // quadratic spacing: dense near r_lo where the envelope is largest
    const double r = r_lo + (r_hi - r_lo) * t * t;
    for (int k = 0; k < z_samples; ++k) {
      const double z = (z_samples == 1 || z_limit == 0.0)
                           ? z_center
                           : z_center - z_limit + 2.0 * z_limit * k / (z_samples - 1);
      for (const auto& az : azimuths)
        worst = std::max(worst, std::abs(v.evaluate(Vec3(r * az[0], r * az[1], z))));
    }
  }
  return worst;
}

}  // namespace detail

struct DecayScanOptions {
  double base_radius = 1.0;
  double max_radius = 4096.0;
  int radial_samples = 512;
  int z_samples = 9;
  double z_center = 0.0;  // midpoint of the probed z window
};

/// Smallest radius in the doubling scan {0, R0, 2 R0, 4 R0, ...} outside of
/// which |v| stays below tol for all probed z in z_center +- z_limit.
/// Throws NoDecay when max_radius is reached (slowly decaying profiles).
inline double decay_radius(const PairPotential& v, double tol, double z_limit = 4.0,
                           const DecayScanOptions& opt = {}) {
  if (!(tol > 0.0)) throw ValidationError("decay_radius: tol must be positive");
  for (double R = 0.0; R <= opt.max_radius;
       R = (R == 0.0) ? opt.base_radius : 2.0 * R) {
    const double peak = detail::annulus_max(v, R, opt.max_radius, z_limit,
                                            opt.radial_samples, opt.z_samples, opt.z_center);
    if (peak < tol) return R;
  }
  throw NoDecay("decay_radius: |v| not below tol within max_radius (decay exponent <= 1?)");
}

/// Grid maximum of <x_h>^{2r} |v(x_h, z)| over |z| <= z_limit: a lower
/// estimate of the weighted sup norm ||<.>^{2r} v||_inf.
inline double weighted_norm_estimate(const PairPotential& v, double r, double z_limit,
                                     int grid_n, double horizontal_max = 64.0) {
  if (!(r > 1.0)) throw ValidationError("weighted_norm_estimate: requires r > 1");
  if (grid_n < 2) throw ValidationError("weighted_norm_estimate: grid must be >= 2");
  static const Vec2 azimuths[4] = {Vec2(1, 0), Vec2(0, 1), Vec2(std::sqrt(0.5), std::sqrt(0.5)),
                                   Vec2(std::sqrt(0.5), -std::sqrt(0.5))};
  double sup = 0.0;
  for (int i = 0; i < grid_n; ++i) {
    const double rh = horizontal_max * i / (grid_n - 1);
    const double weight = std::pow(1.0 + rh * rh, r);
    for (int k = 0; k < grid_n; ++k) {
      const double z = z_limit == 0.0 ? 0.0 : -z_limit + 2.0 * z_limit * k / (grid_n - 1);
      for (const auto& az : azimuths)
        sup = std::max(sup, weight * std::abs(v.evaluate(Vec3(rh * az[0], rh * az[1], z))));
    }
  }
  return sup;
}

}  // namespace moire
