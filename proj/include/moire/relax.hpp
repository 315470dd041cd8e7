#pragma once

#include <vector>

#include "moire/energy.hpp"

namespace moire {

/// Settings for the spectral gradient-descent relaxation.
struct RelaxConfig {
  int n_cut = 6;
  long grid = 64;
  long max_iterations = 2000;
  double grad_tol = 1e-6;
  double backtracking_factor = 0.5;
  double sufficient_decrease = 1e-4;  // Armijo constant
  bool relax_z = false;               // z coefficients frozen by default
  bool report_epsilon_scale = false;

  void validate() const {
    if (!(grad_tol > 0.0)) throw ValidationError("RelaxConfig: grad_tol must be positive");
    if (!(backtracking_factor > 0.0 && backtracking_factor < 1.0))
      throw ValidationError("RelaxConfig: backtracking factor must lie in (0,1)");
    if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0))
      throw ValidationError("RelaxConfig: sufficient-decrease constant must lie in (0,1)");
    if (max_iterations < 0) throw ValidationError("RelaxConfig: max_iterations < 0");
    if (grid < 2) throw ValidationError("RelaxConfig: grid must be >= 2");
    if (n_cut < 0) throw ValidationError("RelaxConfig: n_cut must be >= 0");
  }
};

/// Real degrees of freedom of a displacement pair: for every layer,
/// sublattice and canonical mode (n = 0 or the lexicographic half-space),
/// the real and imaginary coefficient parts of the free components.  The
/// conjugate modes follow by Hermitian symmetry.
class ParameterLayout {
 public:
  struct Entry {
    int layer;   // 1 or 2
    int alpha;
    Index2 n;
    int comp;    // 0, 1 (in-plane), 2 (z, only when relaxing z)
    bool imag;
  };

  ParameterLayout(const DisplacementField& u1, const DisplacementField& u2, bool relax_z) {
    for (int layer : {1, 2}) {
      const DisplacementField& u = (layer == 1) ? u1 : u2;
      const int comps = relax_z ? 3 : 2;
      for (int alpha = 0; alpha < u.sublattice_count(); ++alpha)
        for (long a = 0; a <= u.n_cut(); ++a)
          for (long b = (a == 0 ? 0 : -u.n_cut()); b <= u.n_cut(); ++b) {
            const Index2 n(a, b);
            const bool zero_mode = (a == 0 && b == 0);
            for (int comp = 0; comp < comps; ++comp) {
              entries_.push_back({layer, alpha, n, comp, false});
              if (!zero_mode) entries_.push_back({layer, alpha, n, comp, true});
            }
          }
    }
  }

  long size() const { return static_cast<long>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }

  Eigen::VectorXd extract(const DisplacementField& u1, const DisplacementField& u2) const {
    Eigen::VectorXd p(size());
    for (long i = 0; i < size(); ++i) {
      const Entry& e = entries_[static_cast<size_t>(i)];
      const Vec3c c = ((e.layer == 1) ? u1 : u2).mode(e.alpha, e.n);
      p[i] = e.imag ? c[e.comp].imag() : c[e.comp].real();
    }
    return p;
  }

  void apply(const Eigen::VectorXd& p, DisplacementField& u1, DisplacementField& u2) const {
    for (long i = 0; i < size(); ++i) {
      const Entry& e = entries_[static_cast<size_t>(i)];
      DisplacementField& u = (e.layer == 1) ? u1 : u2;
      Vec3c c = u.mode(e.alpha, e.n);
      Complex value = c[e.comp];
      if (e.imag)
        value = Complex(value.real(), p[i]);
      else
        value = Complex(p[i], value.imag());
      c[e.comp] = value;
      u.set_mode(e.alpha, e.n, c);
    }
  }

 private:
  std::vector<Entry> entries_;
};

namespace detail {

// complex powers z^k for k in [-n_max, n_max], refreshed per point
struct PhasePowers {
  explicit PhasePowers(int n_max) : n_max_(n_max), table_(2 * (2 * n_max + 1)) {}

  void fill(const Mat2& Bt, const Vec2& x) {
    const Vec2 w = Bt * x;
    for (int axis = 0; axis < 2; ++axis) {
      Complex* t = row(axis);
      const Complex z(std::cos(w[axis]), std::sin(w[axis]));
      const Complex zc = std::conj(z);
      t[n_max_] = Complex(1.0, 0.0);
      for (int k = 1; k <= n_max_; ++k) {
        t[n_max_ + k] = t[n_max_ + k - 1] * z;
        t[n_max_ - k] = t[n_max_ - k + 1] * zc;
      }
    }
  }

  Complex pow(const Index2& n) const {
    return row(0)[n_max_ + n[0]] * row(1)[n_max_ + n[1]];
  }

  Complex* row(int axis) { return table_.data() + axis * (2 * n_max_ + 1); }
  const Complex* row(int axis) const { return table_.data() + axis * (2 * n_max_ + 1); }

  int n_max_;
  std::vector<Complex> table_;
};

}  // namespace detail

/// The relaxation objective: Cauchy-Born elastic energy (analytic in
/// coefficient space) plus the interlayer limit energy on a fixed quadrature
/// grid and lattice ball.  Freezing grid and ball makes the objective an
/// exactly differentiable function of the coefficients.
class RelaxProblem {
 public:
  RelaxProblem(const BilayerGeometry& g, const SublatticeSpec& subl, PairPotential v,
               ElasticModuli moduli1, ElasticModuli moduli2, InterlayerScheme scheme,
               long grid, int n_cut, int sublattices = 1, bool relax_z = false)
      : g_(g), subl_(subl), v_(std::move(v)), moduli1_(moduli1), moduli2_(moduli2),
        scheme_(scheme), grid_(grid),
        u1_(g, n_cut, sublattices), u2_(g, n_cut, sublattices),
        layout_(u1_, u2_, relax_z) {
    moduli1.validate();
    moduli2.validate();
  }

  const ParameterLayout& layout() const { return layout_; }
  const BilayerGeometry& geometry() const { return g_; }
  const InterlayerScheme& scheme() const { return scheme_; }
  long grid() const { return grid_; }

  void fields_at(const Eigen::VectorXd& p, DisplacementField& u1,
                 DisplacementField& u2) const {
    u1 = u1_;
    u2 = u2_;
    layout_.apply(p, u1, u2);
  }

  double energy(const Eigen::VectorXd& p) const {
    DisplacementField u1, u2;
    fields_at(p, u1, u2);
    double e = cauchy_born_energy_modes(u1, moduli1_) + cauchy_born_energy_modes(u2, moduli2_);
    for (int j : {1, 2})
      e += 0.5 * interlayer_energy_limit(g_, j, subl_, u1, u2, v_, scheme_, grid_).value;
    return e;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const {
    DisplacementField u1, u2;
    fields_at(p, u1, u2);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout_.size());
    elastic_gradient(u1, u2, grad);
    for (int j : {1, 2}) interlayer_gradient(j, u1, u2, grad);
    return grad;
  }

 private:
  // d/dp of sum_j 1/2 avint Du_j : E_j : Du_j via the diagonal quadratic form
  void elastic_gradient(const DisplacementField& u1, const DisplacementField& u2,
                        Eigen::VectorXd& grad) const {
    const auto& entries = layout_.entries();
    for (long i = 0; i < layout_.size(); ++i) {
      const auto& e = entries[static_cast<size_t>(i)];
      if (e.comp > 1) continue;  // z has no in-plane elastic coupling
      const DisplacementField& u = (e.layer == 1) ? u1 : u2;
      const ElasticModuli& m = (e.layer == 1) ? moduli1_ : moduli2_;
      const Vec2 G = u.frequency_basis() * e.n.cast<double>();
      if (G.squaredNorm() == 0.0) continue;
      const Vec3c c = u.mode(e.alpha, e.n);
      const Complex cg = c[0] * G[0] + c[1] * G[1];
      const double part = e.imag ? cg.imag() : cg.real();
      const double coeff = e.imag ? c[e.comp].imag() : c[e.comp].real();
      grad[i] += 2.0 * ((m.lambda + m.mu) * part * G[e.comp] +
                        m.mu * coeff * G.squaredNorm());
    }
  }

  // d/dp of 1/2 e^inter_j by quadrature of grad v against the basis modes
  void interlayer_gradient(int j, const DisplacementField& u1, const DisplacementField& u2,
                           Eigen::VectorXd& grad) const {
    const DisplacementField& uj = (j == 1) ? u1 : u2;
    const DisplacementField& uo = (j == 1) ? u2 : u1;
    const auto& here_sites = subl_.layer(j);
    const auto& other_sites = subl_.layer(3 - j);
    const double dz_layers = (j == 1) ? scheme_.z_offset : -scheme_.z_offset;
    const Mat2 D = disregistry_matrix(g_, j);
    const Vec2 gamma_term = g_.layer_basis(3 - j) * g_.layer_basis_inv(j) * subl_.gamma(j) -
                            subl_.gamma(3 - j);
    const detail::LatticeBall ball(g_.layer_basis(3 - j), g_.layer_basis_inv(3 - j));
    const Mat2 Bt = g_.B_M.transpose();

    // split the layout per (layer, alpha) for the inner accumulations
    struct Slot {
      Index2 n;
      long index_re[3] = {-1, -1, -1};
      long index_im[3] = {-1, -1, -1};
    };
    const int n_alpha_j = static_cast<int>(here_sites.size());
    const int n_alpha_o = static_cast<int>(other_sites.size());
    std::vector<std::vector<Slot>> slots_j(static_cast<size_t>(n_alpha_j));
    std::vector<std::vector<Slot>> slots_o(static_cast<size_t>(n_alpha_o));
    const auto& entries = layout_.entries();
    auto slot_for = [](std::vector<Slot>& list, const Index2& n) -> Slot& {
      for (auto& s : list)
        if (s.n == n) return s;
      list.push_back(Slot{n, {-1, -1, -1}, {-1, -1, -1}});
      return list.back();
    };
    for (long i = 0; i < layout_.size(); ++i) {
      const auto& e = entries[static_cast<size_t>(i)];
      auto* bucket = (e.layer == j) ? &slots_j : ((e.layer == 3 - j) ? &slots_o : nullptr);
      if (!bucket) continue;
      Slot& s = slot_for((*bucket)[static_cast<size_t>(e.alpha)], e.n);
      (e.imag ? s.index_im : s.index_re)[e.comp] = i;
    }

    const double weight =
        0.25 / (g_.layer_area(j) * static_cast<double>(grid_ * grid_));
    const int n_cut = uj.n_cut();

    const long cells = grid_ * grid_;
    const Eigen::VectorXd partial = chunked_accumulate<Eigen::VectorXd>(
        cells,
        [&](Eigen::VectorXd& acc, long flat) {
          const long a = flat / grid_, b = flat % grid_;
          const Vec2 x = g_.A_M * Vec2(static_cast<double>(a) / grid_,
                                       static_cast<double>(b) / grid_);
          const Vec2 y = D * x + gamma_term;

          // gather the truncated lattice ball first; most quadrature points
          // have no in-range site when the potential is trivial
          std::vector<Vec2> sites;
          ball.for_each(y, scheme_.ball_radius(), [&](const Vec2& R) { sites.push_back(R); });
          if (sites.empty()) return;
          const int n_sites = static_cast<int>(sites.size());

          detail::PhasePowers phase_here(n_cut);
          phase_here.fill(Bt, x);
          std::array<Vec3, 8> u_here;
          for (size_t s = 0; s < here_sites.size(); ++s)
            u_here[s] = uj.eval(x, static_cast<int>(s));

          // per-sublattice running sums of grad v for the u_j-side basis
          std::array<Vec3, 8> gsum;
          gsum.fill(Vec3::Zero());

          detail::PhasePowers phase_there(n_cut);
          for (int si = 0; si < n_sites; ++si) {
            const Vec2 w = y - sites[si];
            phase_there.fill(Bt, x - w);
            for (size_t sb = 0; sb < other_sites.size(); ++sb) {
              const Vec3 u_there = uo.eval(x - w, static_cast<int>(sb));
              Vec3 gv_total = Vec3::Zero();
              for (size_t sa = 0; sa < here_sites.size(); ++sa) {
                const Vec2 sep2 = w + here_sites[sa].tau - other_sites[sb].tau;
                const Vec3 gv = v_.gradient(embed(sep2, dz_layers) + u_here[sa] - u_there);
                gsum[sa] += gv;
                gv_total += gv;
              }
              // u_{3-j} enters with a minus sign at x - w
              for (const Slot& s : slots_o[sb]) {
                const Complex ph = phase_there.pow(s.n);
                const bool zero_mode = (s.n[0] == 0 && s.n[1] == 0);
                for (int cmp = 0; cmp < 3; ++cmp) {
                  if (s.index_re[cmp] >= 0)
                    acc[s.index_re[cmp]] -=
                        gv_total[cmp] * (zero_mode ? 1.0 : 2.0 * ph.real());
                  if (s.index_im[cmp] >= 0)
                    acc[s.index_im[cmp]] -= gv_total[cmp] * (-2.0 * ph.imag());
                }
              }
            }
          }

          for (size_t sa = 0; sa < here_sites.size(); ++sa)
            for (const Slot& s : slots_j[sa]) {
              const Complex ph = phase_here.pow(s.n);
              const bool zero_mode = (s.n[0] == 0 && s.n[1] == 0);
              for (int cmp = 0; cmp < 3; ++cmp) {
                if (s.index_re[cmp] >= 0)
                  acc[s.index_re[cmp]] +=
                      gsum[sa][cmp] * (zero_mode ? 1.0 : 2.0 * ph.real());
                if (s.index_im[cmp] >= 0)
                  acc[s.index_im[cmp]] += gsum[sa][cmp] * (-2.0 * ph.imag());
              }
            }
        },
        Eigen::VectorXd(Eigen::VectorXd::Zero(layout_.size())));
    grad += weight * partial;
  }

  BilayerGeometry g_;
  SublatticeSpec subl_;
  PairPotential v_;
  ElasticModuli moduli1_, moduli2_;
  InterlayerScheme scheme_;
  long grid_;
  DisplacementField u1_, u2_;
  ParameterLayout layout_;
};

struct RelaxTraceRow {
  long iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct RelaxTrace {
  std::vector<RelaxTraceRow> rows;
  DisplacementField u1, u2;
  bool converged = false;
  long iterations = 0;
  double epsilon_scale = 0.0;  // 2 sin(theta/2), when requested
};

/// Backtracking (Armijo) gradient descent on the relaxation objective.
/// Every accepted step satisfies E(p - t g) <= E(p) - c t |g|^2; the trace
/// is therefore nonincreasing in energy.
inline RelaxTrace relax(const RelaxProblem& problem, const Eigen::VectorXd& p0,
                        const RelaxConfig& config) {
  config.validate();
  Eigen::VectorXd p = p0;
  double energy = problem.energy(p);
  Eigen::VectorXd grad = problem.gradient(p);
  double step = 1.0;

  RelaxTrace trace;
  trace.rows.push_back({0, energy, grad.norm(), 0.0});
  if (config.report_epsilon_scale)
    trace.epsilon_scale = 2.0 * std::sin(problem.geometry().theta / 2.0);

  long iter = 0;
  while (grad.norm() >= config.grad_tol && iter < config.max_iterations) {
    const double g2 = grad.squaredNorm();
    double t = step * 2.0;  // allow recovery after a cautious previous step
    bool accepted = false;
    while (t > 1e-20) {
      const Eigen::VectorXd candidate = p - t * grad;
      const double e_new = problem.energy(candidate);
      if (e_new <= energy - config.sufficient_decrease * t * g2) {
        p = candidate;
        energy = e_new;
        accepted = true;
        break;
      }
      t *= config.backtracking_factor;
    }
    if (!accepted)
      throw LineSearchStalled("relax: step size underflow (ill-scaled inputs?)");
    step = t;
    grad = problem.gradient(p);
    ++iter;
    trace.rows.push_back({iter, energy, grad.norm(), step});
  }

  trace.converged = grad.norm() < config.grad_tol;
  trace.iterations = iter;
  problem.fields_at(p, trace.u1, trace.u2);
  return trace;
}

struct ProfileSample {
  double t = 0.0;
  Vec2 x = Vec2::Zero();
  Vec2 d = Vec2::Zero();  // D_{1->2} x + u1(x) - u2(x), in-plane
  double dz = 0.0;
};

/// Samples the modulated disregistry D_{1->2} x + u1(x) - u2(x) along a
/// segment of the moire cell (domain-wall diagnostics).
inline std::vector<ProfileSample> domain_wall_profile(const BilayerGeometry& g,
                                                      const DisplacementField& u1,
                                                      const DisplacementField& u2,
                                                      const Vec2& x0, const Vec2& x1, long k,
                                                      int alpha = 0) {
  if (k < 2) throw ValidationError("domain_wall_profile: need k >= 2 samples");
  const Mat2 D = disregistry_matrix(g, 1);
  std::vector<ProfileSample> out;
  out.reserve(static_cast<size_t>(k));
  for (long i = 0; i < k; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(k - 1);
    const Vec2 x = x0 + t * (x1 - x0);
    const Vec3 diff = u1.eval(x, alpha) - u2.eval(x, alpha);
    ProfileSample s;
    s.t = t;
    s.x = x;
    s.d = D * x + diff.head<2>();
    s.dz = diff[2];
    out.push_back(s);
  }
  return out;
}

}  // namespace moire
