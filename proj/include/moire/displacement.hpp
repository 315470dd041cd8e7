#pragma once

#include <vector>

#include "moire/geometry.hpp"
#include "moire/observable.hpp"

namespace moire {

/// One Fourier mode of a displacement field: coefficient c in C^3 at the
/// moire frequency G = B_M n.
struct DisplacementMode {
  Index2 n = Index2::Zero();
  Vec3c c = Vec3c::Zero();
};

/// Moire-periodic displacement of one layer, per sublattice, stored as a
/// truncated Fourier series u(x, alpha) = sum_n c_n(alpha) e^{i B_M n . x}.
/// Hermitian symmetry c(-n) = conj(c(n)) is maintained by construction, so
/// evaluations are real.
class DisplacementField {
 public:
  DisplacementField() = default;
  DisplacementField(const BilayerGeometry& g, int n_cut, int sublattices = 1)
      : B_(g.B_M), Bt_(g.B_M.transpose()), n_cut_(n_cut),
        modes_(static_cast<size_t>(sublattices)) {
    if (n_cut < 0 || n_cut > detail::SeriesEvaluator::kMaxIndex)
      throw ValidationError("DisplacementField: n_cut out of range");
    if (sublattices < 1) throw ValidationError("DisplacementField: need >= 1 sublattice");
  }

  int n_cut() const { return n_cut_; }
  int sublattice_count() const { return static_cast<int>(modes_.size()); }
  const std::vector<DisplacementMode>& modes(int alpha) const {
    return modes_[static_cast<size_t>(alpha)];
  }
  const Mat2& frequency_basis() const { return B_; }

  /// Sets c at n and conj(c) at -n.  The zero mode keeps only its real part.
  void set_mode(int alpha, const Index2& n, Vec3c c) {
    if (std::max(std::abs(n[0]), std::abs(n[1])) > n_cut_)
      throw ValidationError("DisplacementField: mode outside n_cut");
    if (n[0] == 0 && n[1] == 0) c = c.real().cast<Complex>();
    upsert(alpha, n, c);
    if (!(n[0] == 0 && n[1] == 0)) upsert(alpha, Index2(-n[0], -n[1]), c.conjugate());
  }

  Vec3c mode(int alpha, const Index2& n) const {
    for (const auto& m : modes_[static_cast<size_t>(alpha)])
      if (m.n == n) return m.c;
    return Vec3c::Zero();
  }

  Vec3 eval(const Vec2& x, int alpha = 0) const {
    Complex p1[kTable], p2[kTable];
    fill_powers(x, p1, p2);
    Vec3c acc = Vec3c::Zero();
    for (const auto& m : modes_[static_cast<size_t>(alpha)])
      acc += m.c * (p1[m.n[0] + kHalf] * p2[m.n[1] + kHalf]);
    return acc.real();
  }

  /// Spectral derivative: (Du)_{ab} = d u_a / d x_b, exact for the truncated
  /// series.
  Eigen::Matrix<double, 3, 2> gradient(const Vec2& x, int alpha = 0) const {
    Complex p1[kTable], p2[kTable];
    fill_powers(x, p1, p2);
    Eigen::Matrix<Complex, 3, 2> acc = Eigen::Matrix<Complex, 3, 2>::Zero();
    const Complex iunit(0.0, 1.0);
    for (const auto& m : modes_[static_cast<size_t>(alpha)]) {
      const Vec2 G = B_ * m.n.cast<double>();
      const Complex phase = iunit * p1[m.n[0] + kHalf] * p2[m.n[1] + kHalf];
      acc += (m.c * phase) * G.transpose().cast<Complex>();
    }
    return acc.real();
  }

  /// Coefficient-sum bound on sup_x |u(x, alpha)| over all sublattices.
  double sup_norm_bound() const {
    double worst = 0.0;
    for (const auto& list : modes_) {
      double s = 0.0;
      for (const auto& m : list) s += m.c.norm();
      worst = std::max(worst, s);
    }
    return worst;
  }

  /// Coefficient-sum bound on the out-of-plane component only.
  double sup_norm_bound_z() const {
    double worst = 0.0;
    for (const auto& list : modes_) {
      double s = 0.0;
      for (const auto& m : list) s += std::abs(m.c[2]);
      worst = std::max(worst, s);
    }
    return worst;
  }

  /// Coefficient-sum bound on the in-plane components.
  double sup_norm_bound_inplane() const {
    double worst = 0.0;
    for (const auto& list : modes_) {
      double s = 0.0;
      for (const auto& m : list) s += std::hypot(std::abs(m.c[0]), std::abs(m.c[1]));
      worst = std::max(worst, s);
    }
    return worst;
  }

  bool empty() const {
    for (const auto& list : modes_)
      if (!list.empty()) return false;
    return true;
  }

 private:
  static constexpr long kHalf = detail::SeriesEvaluator::kMaxIndex;
  static constexpr long kTable = 2 * kHalf + 1;

  void upsert(int alpha, const Index2& n, const Vec3c& c) {
    auto& list = modes_[static_cast<size_t>(alpha)];
    for (auto& m : list)
      if (m.n == n) {
        m.c = c;
        return;
      }
    list.push_back({n, c});
  }

  void fill_powers(const Vec2& x, Complex* p1, Complex* p2) const {
    const Vec2 w = Bt_ * x;
    for (int axis = 0; axis < 2; ++axis) {
      Complex* table = axis == 0 ? p1 : p2;
      const Complex z(std::cos(w[axis]), std::sin(w[axis]));
      const Complex zc = std::conj(z);
      table[kHalf] = Complex(1.0, 0.0);
      for (long k = 1; k <= n_cut_; ++k) {
        table[kHalf + k] = table[kHalf + k - 1] * z;
        table[kHalf - k] = table[kHalf - k + 1] * zc;
      }
    }
  }

  Mat2 B_ = Mat2::Identity();
  Mat2 Bt_ = Mat2::Identity();
  int n_cut_ = 0;
  std::vector<std::vector<DisplacementMode>> modes_;
};

}  // namespace moire
