#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "moire/geometry.hpp"

namespace moire {

/// Mode of a truncated Fourier series on the moire reciprocal lattice:
/// coefficient c at G = B_M n.
struct FourierMode {
  Index2 n = Index2::Zero();
  Complex c{0.0, 0.0};
};

namespace detail {

/// Evaluates sum_k c_k exp(i (B n_k) . x) with two exponentials per point:
/// exp(i B n . x) = z1^{n1} z2^{n2} where z_l = exp(i (B^T x)_l).
class SeriesEvaluator {
 public:
  SeriesEvaluator() = default;
  SeriesEvaluator(const Mat2& B, std::vector<FourierMode> modes)
      : Bt_(B.transpose()), modes_(std::move(modes)) {
    for (const auto& m : modes_)
      max_abs_ = std::max({max_abs_, std::abs(m.n[0]), std::abs(m.n[1])});
    if (max_abs_ > kMaxIndex)
      throw ValidationError("Fourier series: mode index too large");
  }

  Complex operator()(const Vec2& x) const {
    const Vec2 w = Bt_ * x;
    Complex p1[2 * kMaxIndex + 1], p2[2 * kMaxIndex + 1];
    fill_powers(w[0], p1);
    fill_powers(w[1], p2);
    Complex acc{0.0, 0.0};
    for (const auto& m : modes_)
      acc += m.c * p1[m.n[0] + kMaxIndex] * p2[m.n[1] + kMaxIndex];
    return acc;
  }

  const std::vector<FourierMode>& modes() const { return modes_; }

  static constexpr long kMaxIndex = 64;

 private:
  void fill_powers(double w, Complex* table) const {
    const Complex z(std::cos(w), std::sin(w));
    const Complex zc = std::conj(z);
    table[kMaxIndex] = Complex(1.0, 0.0);
    for (long k = 1; k <= max_abs_; ++k) {
      table[kMaxIndex + k] = table[kMaxIndex + k - 1] * z;
      table[kMaxIndex - k] = table[kMaxIndex - k + 1] * zc;
    }
  }

  Mat2 Bt_ = Mat2::Identity();
  std::vector<FourierMode> modes_;
  long max_abs_ = 0;
};

}  // namespace detail

/// Moire-periodic observable f : R^2 -> C.  When built from a finite Fourier
/// series the modes stay attached, so rate bounds and limit averages can be
/// read off the coefficients.
struct PeriodicObservable {
  std::function<Complex(const Vec2&)> eval;
  std::vector<FourierMode> modes;  // empty when coefficients are unknown

  bool has_modes() const { return !modes.empty(); }
};

inline PeriodicObservable fourier_observable(const BilayerGeometry& g,
                                             std::vector<FourierMode> modes) {
  detail::SeriesEvaluator series(g.B_M, std::move(modes));
  PeriodicObservable f;
  f.modes = series.modes();
  f.eval = [series = std::move(series)](const Vec2& x) { return series(x); };
  return f;
}

inline PeriodicObservable plane_wave(const BilayerGeometry& g, const Index2& n) {
  return fourier_observable(g, {FourierMode{n, Complex(1.0, 0.0)}});
}

/// Hermitian symmetry c(-n) = conj(c(n)) of a mode list (real-valued series).
inline bool is_hermitian(const std::vector<FourierMode>& modes, double tol = 1e-12) {
  for (const auto& a : modes) {
    bool found = false;
    for (const auto& b : modes) {
      if (b.n == Index2(-a.n[0], -a.n[1])) {
        if (std::abs(b.c - std::conj(a.c)) > tol) return false;
        found = true;
        break;
      }
    }
    if (!found && std::abs(a.c) > tol) return false;
  }
  return true;
}

/// sup_{G_M != 0} |G_M|^{2(sigma+s)} |fhat(G_M)| over the stored modes; the
/// weighted-decay supremum entering the quantitative rate constant.
inline double fourier_decay_sup(const BilayerGeometry& g, const PeriodicObservable& f,
                                double sigma, double s) {
  double sup = 0.0;
  for (const auto& m : f.modes) {
    if (m.n[0] == 0 && m.n[1] == 0) continue;
    const Vec2 G = g.B_M * m.n.cast<double>();
    sup = std::max(sup, std::pow(G.norm(), 2.0 * (sigma + s)) * std::abs(m.c));
  }
  return sup;
}

/// Observable on the product cell, h : R^2 x R^2 -> C, periodic with respect
/// to R_M x R_{3-j}.
struct DoubleObservable {
  std::function<Complex(const Vec2&, const Vec2&)> eval;
};

/// h(x, y) = exp(i (G_M . x + G_layer . y)) with G_M = B_M n_M and
/// G_layer = B_{3-j} n_layer.
inline DoubleObservable plane_wave_pair(const BilayerGeometry& g, int j, const Index2& n_M,
                                        const Index2& n_layer) {
  const Vec2 GM = g.B_M * n_M.cast<double>();
  const Vec2 GL = g.reciprocal_basis(3 - j) * n_layer.cast<double>();
  DoubleObservable h;
  h.eval = [GM, GL](const Vec2& x, const Vec2& y) {
    const double phase = GM.dot(x) + GL.dot(y);
    return Complex(std::cos(phase), std::sin(phase));
  };
  return h;
}

}  // namespace moire
