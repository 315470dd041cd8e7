#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "moire/displacement.hpp"
#include "moire/potential.hpp"

namespace moire {

/// One leg of a finite difference stencil: the difference is taken between
/// (x + offset, alpha_to) and (x, alpha_from); `base` is the embedded
/// reference separation offset + tau_to - tau_from at zero displacement.
struct StencilEntry {
  Vec2 offset = Vec2::Zero();
  int alpha_to = 0;
  Vec3 base = Vec3::Zero();
};

/// Finite-range monolayer site potential acting on difference stencils
/// { (R', alpha') -> u(x + R', alpha') - u(x, alpha) }.
class StencilPotential {
 public:
  using EvalFn = std::function<double(int alpha_from, const std::vector<StencilEntry>&,
                                      const std::vector<Vec3>&)>;

  StencilPotential() = default;

  int sublattice_count() const { return static_cast<int>(entries_.size()); }
  const std::vector<StencilEntry>& entries(int alpha_from) const {
    return entries_[static_cast<size_t>(alpha_from)];
  }
  double cutoff() const { return cutoff_; }

  double evaluate(int alpha_from, const std::vector<Vec3>& diffs) const {
    return eval_(alpha_from, entries_[static_cast<size_t>(alpha_from)], diffs);
  }

  /// Pair stencil of the monolayer model: sum of w(base + d) - w(base) over
  /// all in-range legs.  Constant displacements give exactly zero.
  static StencilPotential pair(const BilayerGeometry& g, int j, const SublatticeSpec& subl,
                               PairPotential w, double cutoff) {
    StencilPotential s;
    s.cutoff_ = cutoff;
    const auto& sites = subl.layer(j);
    const int count = static_cast<int>(sites.size());
    const Mat2& Aj = g.layer_basis(j);
    const long reach =
        static_cast<long>(std::ceil(cutoff * spectral_norm(g.layer_basis_inv(j)))) + 1;
    s.entries_.resize(static_cast<size_t>(count));
    for (int from = 0; from < count; ++from) {
      for (int to = 0; to < count; ++to) {
        for (long m1 = -reach; m1 <= reach; ++m1)
          for (long m2 = -reach; m2 <= reach; ++m2) {
            const Vec2 offset = Aj * Vec2(static_cast<double>(m1), static_cast<double>(m2));
            const Vec2 sep2 = offset + sites[static_cast<size_t>(to)].tau -
                              sites[static_cast<size_t>(from)].tau;
            if (sep2.norm() > cutoff || sep2.norm() < 1e-12) continue;
            s.entries_[static_cast<size_t>(from)].push_back(
                {offset, to, embed(sep2)});
          }
      }
    }
    s.eval_ = [w = std::move(w)](int, const std::vector<StencilEntry>& entries,
                                 const std::vector<Vec3>& diffs) {
      double acc = 0.0;
      for (size_t i = 0; i < entries.size(); ++i)
        acc += w.evaluate(entries[i].base + diffs[i]) - w.evaluate(entries[i].base);
      return acc;
    };
    return s;
  }

  /// Identically zero site potential (no legs).
  static StencilPotential zero(int sublattices = 1) {
    StencilPotential s;
    s.entries_.resize(static_cast<size_t>(sublattices));
    s.eval_ = [](int, const std::vector<StencilEntry>&, const std::vector<Vec3>&) {
      return 0.0;
    };
    return s;
  }

  /// Arbitrary rule over a fixed entry table (test hook).
  static StencilPotential custom(std::vector<std::vector<StencilEntry>> entries, EvalFn fn,
                                 double cutoff) {
    StencilPotential s;
    s.entries_ = std::move(entries);
    s.eval_ = std::move(fn);
    s.cutoff_ = cutoff;
    return s;
  }

 private:
  std::vector<std::vector<StencilEntry>> entries_;
  EvalFn eval_;
  double cutoff_ = 0.0;
};

}  // namespace moire
