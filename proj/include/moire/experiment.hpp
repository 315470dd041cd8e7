#pragma once

#include <filesystem>
#include <random>
#include <set>

#include "moire/diophantine.hpp"
#include "moire/ergodic.hpp"
#include "moire/fit.hpp"
#include "moire/io.hpp"
#include "moire/rate_constant.hpp"
#include "moire/relax.hpp"

namespace moire {

/// Parsed and validated experiment description.  All files are resolved
/// against the directory of the config document.
struct ExperimentConfig {
  std::string kind;
  std::string base_dir = ".";
  std::string out_dir = ".";
  unsigned long seed = 1234;
  std::string geometry_file, potential_file, displacement_file, moduli_file;
  Json params = Json::object();

  std::string resolve(const std::string& file) const {
    return (std::filesystem::path(base_dir) / file).string();
  }
};

namespace exp_detail {

inline const std::set<std::string>& known_kinds() {
  static const std::set<std::string> kinds = {"geometry", "dirichlet", "diophantine",
                                              "converge", "misfit", "energy",
                                              "relax", "profile"};
  return kinds;
}

inline void require_file(const ExperimentConfig& c, const std::string& field,
                         const std::string& value) {
  if (value.empty())
    throw ValidationError("config." + field + ": required for the '" + c.kind +
                          "' experiment");
  if (!std::filesystem::exists(c.resolve(value)))
    throw ValidationError("config." + field + ": file not found: " + c.resolve(value));
}

inline std::vector<long> n_list_from(const Json& params, const char* field,
                                     std::vector<long> fallback) {
  if (!params.contains(field)) return fallback;
  std::vector<long> out;
  for (const auto& v : params[field]) out.push_back(v.get<long>());
  if (out.empty()) throw ValidationError(std::string("config.params.") + field + ": empty");
  for (size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1])
      throw ValidationError(std::string("config.params.") + field + ": not increasing");
  if (out.front() < 0)
    throw ValidationError(std::string("config.params.") + field + ": N must be >= 0");
  return out;
}

}  // namespace exp_detail

inline ExperimentConfig parse_config(const std::string& text, const std::string& base_dir,
                                     const std::string& expected_kind = "") {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }

  ExperimentConfig c;
  c.base_dir = base_dir;
  c.kind = doc.value("experiment", expected_kind);
  if (c.kind.empty()) throw ValidationError("config.experiment: missing experiment kind");
  if (!expected_kind.empty() && c.kind != expected_kind)
    throw ValidationError("config.experiment: '" + c.kind + "' does not match the '" +
                          expected_kind + "' subcommand");
  if (exp_detail::known_kinds().count(c.kind) == 0)
    throw ValidationError("config.experiment: unknown kind '" + c.kind + "'");

  c.out_dir = doc.value("out_dir", std::string("."));
  c.seed = doc.value("seed", 1234UL);
  c.geometry_file = doc.value("geometry_file", std::string());
  c.potential_file = doc.value("potential_file", std::string());
  c.displacement_file = doc.value("displacement_file", std::string());
  c.moduli_file = doc.value("moduli_file", std::string());
  c.params = doc.value("params", Json::object());

  // every experiment needs the geometry
  exp_detail::require_file(c, "geometry_file", c.geometry_file);
  if (c.kind == "misfit" || c.kind == "energy" || c.kind == "relax")
    exp_detail::require_file(c, "potential_file", c.potential_file);
  if (c.kind == "energy" || c.kind == "profile")
    exp_detail::require_file(c, "displacement_file", c.displacement_file);
  if (c.kind == "energy" || c.kind == "relax")
    exp_detail::require_file(c, "moduli_file", c.moduli_file);
  if (!c.displacement_file.empty())
    exp_detail::require_file(c, "displacement_file", c.displacement_file);

  // range checks for the common parameters
  if (c.params.contains("sigma") && !(c.params["sigma"].get<double>() > 1.0))
    throw ValidationError("config.params.sigma: must be > 1");
  if (c.params.contains("s") && !(c.params["s"].get<double>() > 1.0))
    throw ValidationError("config.params.s: must be > 1");
  if (c.params.contains("grid") && c.params["grid"].get<long>() < 2)
    throw ValidationError("config.params.grid: must be >= 2");
  if (c.params.contains("n_max") && c.params["n_max"].get<long>() < 1)
    throw ValidationError("config.params.n_max: must be >= 1");
  exp_detail::n_list_from(c.params, "N_list", {8, 16, 32});
  return c;
}

struct ExperimentResult {
  Json summary;
  std::vector<std::string> outputs;
};

namespace exp_detail {

struct Loaded {
  GeometryBundle geo;
  Json inputs;  // path -> content hash
};

inline Loaded load_geometry(const ExperimentConfig& c) {
  Loaded l;
  const std::string path = c.resolve(c.geometry_file);
  const std::string text = read_file(path);
  try {
    l.geo = geometry_from_json(Json::parse(text));
  } catch (const Json::parse_error& e) {
    throw ParseError("geometry file: invalid JSON: " + std::string(e.what()));
  }
  l.inputs[c.geometry_file] = fnv1a_hex(text);
  return l;
}

inline PairPotential load_potential(const ExperimentConfig& c, Json& inputs) {
  const std::string path = c.resolve(c.potential_file);
  const std::string text = read_file(path);
  inputs[c.potential_file] = fnv1a_hex(text);
  try {
    return potential_from_json(Json::parse(text), c.base_dir);
  } catch (const Json::parse_error& e) {
    throw ParseError("potential file: invalid JSON: " + std::string(e.what()));
  }
}

inline std::pair<ElasticModuli, ElasticModuli> load_moduli(const ExperimentConfig& c,
                                                           Json& inputs) {
  const std::string path = c.resolve(c.moduli_file);
  const std::string text = read_file(path);
  inputs[c.moduli_file] = fnv1a_hex(text);
  try {
    return moduli_from_json(Json::parse(text));
  } catch (const Json::parse_error& e) {
    throw ParseError("moduli file: invalid JSON: " + std::string(e.what()));
  }
}

inline DisplacementBundle load_displacement(const ExperimentConfig& c, Json& inputs,
                                            const GeometryBundle& geo) {
  const std::string path = c.resolve(c.displacement_file);
  const std::string text = read_file(path);
  inputs[c.displacement_file] = fnv1a_hex(text);
  try {
    return displacement_from_json(Json::parse(text), geo.geometry,
                                  static_cast<int>(geo.sublattices.layer1.size()),
                                  static_cast<int>(geo.sublattices.layer2.size()));
  } catch (const Json::parse_error& e) {
    throw ParseError("displacement file: invalid JSON: " + std::string(e.what()));
  }
}

inline std::string out_path(const ExperimentConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  return (std::filesystem::path(c.out_dir) / name).string();
}

inline Json mat2_json(const Mat2& m) {
  return Json{{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}};
}

/// Seeded smooth random observable: Hermitian coefficients on the
/// (2k+1) x (2k+1) mode square with 1/(1+|n|^2)^2 rolloff.
inline PeriodicObservable seeded_observable(const BilayerGeometry& g, int n_cut,
                                            double amplitude, unsigned long seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<FourierMode> modes;
  for (long a = 0; a <= n_cut; ++a)
    for (long b = (a == 0 ? 0 : -n_cut); b <= n_cut; ++b) {
      const double scale = amplitude / std::pow(1.0 + static_cast<double>(a * a + b * b), 2.0);
      Complex c(d(gen), d(gen));
      if (a == 0 && b == 0) c = Complex(c.real(), 0.0);
      modes.push_back({Index2(a, b), scale * c});
      if (!(a == 0 && b == 0)) modes.push_back({Index2(-a, -b), scale * std::conj(c)});
    }
  return fourier_observable(g, modes);
}

inline ExperimentResult run_geometry(const ExperimentConfig& c) {
  Loaded l = load_geometry(c);
  const auto& g = l.geo.geometry;
  Json report = geometry_to_json(g, l.geo.sublattices);
  report["derived"] = {
      {"A1", mat2_json(g.A1)},     {"A2", mat2_json(g.A2)},
      {"B1", mat2_json(g.B1)},     {"B2", mat2_json(g.B2)},
      {"A_M", mat2_json(g.A_M)},   {"B_M", mat2_json(g.B_M)},
      {"area_gamma1", g.area_gamma1}, {"area_gamma2", g.area_gamma2},
      {"area_gammaM", g.area_gammaM},
      {"D_1to2", mat2_json(disregistry_matrix(g, 1))},
      {"D_2to1", mat2_json(disregistry_matrix(g, 2))},
      {"epsilon_scale", 2.0 * std::sin(g.theta / 2.0)},
  };
  try {
    report["derived"]["moire_scale"] = moire_scale(g);
  } catch (const DegenerateScale&) {
    report["derived"]["moire_scale"] = nullptr;
  }
  const long n_max = c.params.value("n_max", 64L);
  const double tol = c.params.value("tol", 1e-6);
  const auto verdict = commensuration_scan(g, n_max, tol);
  report["commensuration"] = {{"found", verdict.found},
                              {"n_max", n_max},
                              {"tol", tol}};
  if (verdict.found) {
    report["commensuration"]["witness"] = {verdict.witness[0], verdict.witness[1]};
    report["commensuration"]["distance"] = verdict.distance;
  }

  ExperimentResult res;
  res.summary = {{"experiment", "geometry"}, {"inputs", l.inputs}};
  const std::string path = out_path(c, "geometry_report.json");
  std::ofstream(path) << report.dump(2) << "\n";
  res.outputs.push_back(path);
  return res;
}

inline ExperimentResult run_dirichlet(const ExperimentConfig& c) {
  Loaded l = load_geometry(c);
  const auto& g = l.geo.geometry;
  const int j = c.params.value("layer_j", 1);
  const long window = c.params.value("window", 8L);
  const auto N_list = n_list_from(c.params, "N_list", {1, 4, 16, 64});

  const std::string path = out_path(c, "dirichlet_kernel.csv");
  CsvWriter csv(path);
  csv.comment("Dirichlet kernel of the truncated layer-" + std::to_string(j) +
              " lattice on the moire frequency window");
  csv.header({"N", "n1", "n2", "G_x", "G_y", "delta_N"});
  for (long N : N_list)
    for (long n1 = -window; n1 <= window; ++n1)
      for (long n2 = -window; n2 <= window; ++n2) {
        const Vec2 G = g.B_M * Vec2(static_cast<double>(n1), static_cast<double>(n2));
        csv.row({static_cast<double>(N), static_cast<double>(n1), static_cast<double>(n2),
                 G[0], G[1], dirichlet_kernel(g, j, G, N)});
      }

  ExperimentResult res;
  res.summary = {{"experiment", "dirichlet"}, {"inputs", l.inputs},
                 {"window", window}, {"layer_j", j}};
  res.outputs.push_back(path);
  return res;
}

inline ExperimentResult run_diophantine(const ExperimentConfig& c) {
  // the scan only needs the primitive lattice data, so commensurate angles
  // (theta = 0) are acceptable here
  const std::string text = read_file(c.resolve(c.geometry_file));
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("geometry file: invalid JSON: " + std::string(e.what()));
  }
  const Mat2 A = io_detail::mat2_from(io_detail::require(doc, "A", "geometry"), "geometry.A");
  const double theta = io_detail::require(doc, "theta_deg", "geometry").get<double>() * pi / 180.0;
  const double q = io_detail::require(doc, "q", "geometry").get<double>();
  const BilayerGeometry g = primitive_geometry(A, theta, q);

  const double sigma = c.params.value("sigma", 1.15);
  const long n_max = c.params.value("n_max", 64L);
  std::vector<DiophantineRow> rows;
  const auto scan = diophantine_scan(g, sigma, n_max, &rows);

  const std::string csv_path = out_path(c, "diophantine_scan.csv");
  CsvWriter csv(csv_path);
  csv.comment("dist(q^{sign} A^T R_{sign theta} A^{-T} n, Z^2) over the scan window");
  csv.header({"n1", "n2", "sign", "norm_n", "dist", "weighted"});
  for (const auto& r : rows)
    csv.row({static_cast<double>(r.n[0]), static_cast<double>(r.n[1]),
             static_cast<double>(r.sign), r.n.cast<double>().norm(), r.dist, r.weighted});

  // histogram of distances (log10 bins; exact zeros counted separately)
  constexpr int bins = 24;
  std::vector<long> counts(bins, 0);
  long zeros = 0;
  for (const auto& r : rows) {
    if (r.dist <= 0.0) {
      ++zeros;
      continue;
    }
    const double lg = std::log10(r.dist);
    const int b = std::max(0, std::min(bins - 1, static_cast<int>((lg + 12.0) / 12.0 * bins)));
    ++counts[b];
  }

  Json summary = {{"experiment", "diophantine"},
                  {"sigma", sigma},
                  {"n_max", n_max},
                  {"K_hat", scan.K_hat},
                  {"K_hat_provenance", DiophantineScan::provenance()},
                  {"argmin_n", {scan.argmin_n[0], scan.argmin_n[1]}},
                  {"argmin_sign", scan.argmin_sign},
                  {"K_hat_plus", scan.K_hat_plus},
                  {"K_hat_minus", scan.K_hat_minus},
                  {"commensurate", scan.commensurate()},
                  {"histogram",
                   {{"log10_bin_lo", -12.0}, {"log10_bin_hi", 0.0}, {"counts", counts},
                    {"exact_zeros", zeros}}}};
  if (!scan.commensurate()) {
    const auto pb = pair_upper_bound(g, std::min<long>(n_max, 32));
    summary["pair_bound_M"] = pb.value;
    summary["pair_bound_sigma_star"] = pb.sigma_star;
  }

  const std::string geom_text = read_file(c.resolve(c.geometry_file));
  summary["inputs"] = {{c.geometry_file, fnv1a_hex(geom_text)}};
  ExperimentResult res;
  res.summary = summary;
  res.outputs.push_back(csv_path);
  return res;
}

inline ExperimentResult run_converge(const ExperimentConfig& c) {
  Loaded l = load_geometry(c);
  const auto& g = l.geo.geometry;
  const int j = c.params.value("layer_j", 1);
  const auto N_list = n_list_from(c.params, "N_list", {8, 16, 32, 64, 128});
  const long grid = c.params.value("grid", 64L);
  const int obs_cut = c.params.value("observable_n_cut", 3);
  const double amplitude = c.params.value("observable_amplitude", 1.0);
  const double sigma = c.params.value("sigma", 1.15);
  const double s = c.params.value("s", 1.85);
  const long n_max = c.params.value("n_max", 64L);

  const auto f = seeded_observable(g, obs_cut, amplitude, c.seed);
  const Complex reference = limit_average(g, f, grid);

  double C = 0.0;
  bool have_bound = false;
  const auto scan = diophantine_scan(g, sigma, n_max);
  if (!scan.commensurate()) {
    C = error_prefactor(scan, s, fourier_decay_sup(g, f, sigma, s)).C;
    have_bound = true;
  }

  std::vector<ConvergenceRecord> records;
  const std::string path = out_path(c, "converge.csv");
  CsvWriter csv(path);
  csv.comment("finite-N ergodic averages of the seeded observable vs the cell average");
  csv.header({"N", "value_re", "value_im", "reference_re", "reference_im", "abs_error",
              "bound"});
  for (long N : N_list) {
    const Complex value = ergodic_average(g, j, f, N);
    const double bound = have_bound ? C / static_cast<double>(2 * N + 1) : 0.0;
    records.push_back(ConvergenceRecord::make(N, value, reference, bound));
    csv.row({static_cast<double>(N), value.real(), value.imag(), reference.real(),
             reference.imag(), records.back().abs_error, bound});
  }

  Json summary = {{"experiment", "converge"},
                  {"inputs", l.inputs},
                  {"layer_j", j},
                  {"seed", c.seed},
                  {"sigma", sigma},
                  {"s", s},
                  {"n_max", n_max},
                  {"K_hat", scan.K_hat},
                  {"K_hat_provenance", DiophantineScan::provenance()},
                  {"bound_prefactor_C", C}};
  try {
    const auto fit = fit_rate(records);
    summary["fit"] = {{"slope", fit.slope},
                      {"intercept", fit.intercept},
                      {"max_residual", fit.max_residual},
                      {"degenerate", fit.degenerate}};
  } catch (const ValidationError&) {
    summary["fit"] = nullptr;  // fewer than 3 usable records
  }

  ExperimentResult res;
  res.summary = summary;
  res.outputs.push_back(path);
  return res;
}

inline ExperimentResult run_misfit(const ExperimentConfig& c) {
  Loaded l = load_geometry(c);
  const auto& g = l.geo.geometry;
  const auto v = load_potential(c, l.inputs);
  const int j = c.params.value("layer_j", 1);
  const long grid = c.params.value("grid", 96L);
  const double z_offset = c.params.value("z_offset_angstrom", 3.35);
  const double tol = c.params.value("tol", 1e-10);

  DecayScanOptions decay_opt;
  decay_opt.z_center = z_offset;
  const double Rc = decay_radius(v, tol, 0.0, decay_opt);

  const std::string path = out_path(c, "misfit_map.csv");
  CsvWriter csv(path);
  csv.comment("stacking-fault energy over one unit cell of layer " + std::to_string(3 - j));
  csv.header({"a", "b", "x", "y", "phi_mev"});
  double best = -std::numeric_limits<double>::infinity();
  long best_a = 0, best_b = 0;
  for (long a = 0; a < grid; ++a)
    for (long b = 0; b < grid; ++b) {
      const Vec2 x = g.layer_basis(3 - j) *
                     Vec2(static_cast<double>(a) / grid, static_cast<double>(b) / grid);
      const double phi = misfit_energy(g, j, v, x, z_offset, Rc);
      csv.row({static_cast<double>(a), static_cast<double>(b), x[0], x[1], phi});
      if (phi > best) {
        best = phi;
        best_a = a;
        best_b = b;
      }
    }

  const double at_AA = misfit_energy(g, j, v, Vec2::Zero(), z_offset, Rc);
  const double at_AB = misfit_energy(g, j, v, stacking_AB(g, j), z_offset, Rc);
  const double at_BA = misfit_energy(g, j, v, stacking_BA(g, j), z_offset, Rc);

  ExperimentResult res;
  res.summary = {{"experiment", "misfit"},
                 {"inputs", l.inputs},
                 {"layer_j", j},
                 {"grid", grid},
                 {"z_offset_angstrom", z_offset},
                 {"decay_radius", Rc},
                 {"argmax", {best_a, best_b}},
                 {"max_phi_mev", best},
                 {"phi_AA_mev", at_AA},
                 {"phi_AB_mev", at_AB},
                 {"phi_BA_mev", at_BA},
                 {"AB_BA_rel_diff",
                  std::abs(at_AB - at_BA) / std::max(std::abs(at_AB), 1e-300)}};
  res.outputs.push_back(path);
  return res;
}

inline ExperimentResult run_energy(const ExperimentConfig& c) {
  Loaded l = load_geometry(c);
  const auto& g = l.geo.geometry;
  const auto& subl = l.geo.sublattices;
  const auto v = load_potential(c, l.inputs);
  const auto [m1, m2] = load_moduli(c, l.inputs);
  const auto fields = load_displacement(c, l.inputs, l.geo);

  const double z_offset = c.params.value("z_offset_angstrom", 3.35);
  const double tol = c.params.value("tol", 1e-10);
  const long grid = c.params.value("grid", 64L);
  const bool limit = c.params.value("limit", !c.params.contains("N"));
  const double quad_tol = c.params.value("quad_tol", 0.0);

  const auto scheme = make_interlayer_scheme(subl, v, fields.u1, fields.u2, z_offset, tol);

  EnergyBreakdown bd;
  if (limit) {
    bd = total_energy(g, subl, fields.u1, fields.u2, v, m1, m2, scheme, grid, quad_tol);
  } else {
    const long N = c.params.value("N", 16L);
    bd.N = N;
    bd.grid = grid;
    bd.decay_radius = scheme.R_c;
    bd.elastic[0] = cauchy_born_energy(g, fields.u1, m1, grid);
    bd.elastic[1] = cauchy_born_energy(g, fields.u2, m2, grid);
    for (int j : {1, 2})
      bd.inter[static_cast<size_t>(j - 1)] =
          0.5 * interlayer_energy_N(g, j, subl, fields.u1, fields.u2, v, scheme, N);
    bd.total = bd.elastic[0] + bd.elastic[1] + bd.inter[0] + bd.inter[1];
  }

  Json rate_report = nullptr;
  if (c.params.value("report_rate_constant", false)) {
    const auto rate = estimate_pair_rate_constant(
        g, subl, v, fields.u1, fields.u2, v.decay_exponent(),
        c.params.value("n_max", 32L), z_offset,
        subl.sublattice_distance() + fields.u1.sup_norm_bound_z() +
            fields.u2.sup_norm_bound_z());
    rate_report = {{"C", rate.C},
                   {"M_pair", rate.M_pair},
                   {"sigma_star", rate.sigma_star},
                   {"v_norm_estimate", rate.v_norm_estimate},
                   {"u_norm_bounds", {rate.u1_norm_bound, rate.u2_norm_bound}},
                   {"provenance", PairRateConstant::provenance()}};
  }

  Json breakdown = {{"experiment", "energy"},
                    {"inputs", l.inputs},
                    {"rate_constant", rate_report},
                    {"mode", limit ? "limit" : "finite_N"},
                    {"N", bd.N},
                    {"grid", bd.grid},
                    {"decay_radius", bd.decay_radius},
                    {"sites_per_point", bd.sites_per_point},
                    {"refine_delta", bd.refine_delta},
                    {"e_mono_mev", {bd.mono[0], bd.mono[1]}},
                    {"e_elastic_mev", {bd.elastic[0], bd.elastic[1]}},
                    {"e_inter_mev", {bd.inter[0], bd.inter[1]}},
                    {"e_total_mev", bd.total}};

  const std::string json_path = out_path(c, "energy_breakdown.json");
  std::ofstream(json_path) << breakdown.dump(2) << "\n";

  // append to the results ledger (header written once)
  const std::string ledger_path = out_path(c, "energy_ledger.csv");
  const bool fresh = !std::filesystem::exists(ledger_path);
  std::ofstream ledger(ledger_path, std::ios::app);
  if (fresh)
    ledger << "mode,N,grid,e_mono_1,e_mono_2,e_elastic_1,e_elastic_2,e_inter_1,e_inter_2,"
              "e_total\n";
  ledger << (limit ? "limit" : "finite_N") << "," << bd.N << "," << bd.grid;
  for (double x : {bd.mono[0], bd.mono[1], bd.elastic[0], bd.elastic[1], bd.inter[0],
                   bd.inter[1], bd.total})
    ledger << "," << format_full(x);
  ledger << "\n";

  ExperimentResult res;
  res.summary = breakdown;
  res.outputs.push_back(json_path);
  res.outputs.push_back(ledger_path);
  return res;
}

inline ExperimentResult run_relax(const ExperimentConfig& c) {
  Loaded l = load_geometry(c);
  const auto& g = l.geo.geometry;
  const auto& subl = l.geo.sublattices;
  const auto v = load_potential(c, l.inputs);
  const auto [m1, m2] = load_moduli(c, l.inputs);

  RelaxConfig rc;
  rc.n_cut = c.params.value("n_cut", 6);
  rc.grid = c.params.value("grid", 64L);
  rc.max_iterations = c.params.value("max_iterations", 500L);
  rc.grad_tol = c.params.value("grad_tol", 1e-6);
  rc.backtracking_factor = c.params.value("backtracking_factor", 0.5);
  rc.sufficient_decrease = c.params.value("sufficient_decrease", 1e-4);
  rc.relax_z = c.params.value("relax_z", false);
  rc.report_epsilon_scale = c.params.value("report_epsilon_scale", true);
  rc.validate();
  const double z_offset = c.params.value("z_offset_angstrom", 3.35);
  const double tol = c.params.value("tol", 1e-8);

  const int sub1 = static_cast<int>(subl.layer1.size());
  DisplacementField u1(g, rc.n_cut, sub1), u2(g, rc.n_cut,
                                              static_cast<int>(subl.layer2.size()));
  if (!c.displacement_file.empty()) {
    const auto fields = load_displacement(c, l.inputs, l.geo);
    if (fields.u1.n_cut() > rc.n_cut)
      throw ValidationError("config.displacement_file: initial field exceeds the mode "
                            "cutoff n_cut");
    for (int alpha = 0; alpha < fields.u1.sublattice_count(); ++alpha)
      for (const auto& m : fields.u1.modes(alpha)) u1.set_mode(alpha, m.n, m.c);
    for (int alpha = 0; alpha < fields.u2.sublattice_count(); ++alpha)
      for (const auto& m : fields.u2.modes(alpha)) u2.set_mode(alpha, m.n, m.c);
  }

  // pad the truncation ball for the displacement growth during descent
  DisplacementField allowance(g, 0, 1);
  allowance.set_mode(0, Index2(0, 0),
                     Vec3c(Complex(c.params.value("displacement_allowance", 0.5), 0),
                           Complex(0, 0), Complex(0, 0)));
  const auto scheme = make_interlayer_scheme(subl, v, allowance, allowance, z_offset, tol);

  RelaxProblem problem(g, subl, v, m1, m2, scheme, rc.grid, rc.n_cut, sub1, rc.relax_z);
  const Eigen::VectorXd p0 = problem.layout().extract(u1, u2);
  const auto trace = relax(problem, p0, rc);

  const std::string trace_path = out_path(c, "relax_trace.csv");
  CsvWriter csv(trace_path);
  csv.comment("backtracking gradient descent on the elastic + interlayer energy");
  csv.header({"iter", "energy_mev", "grad_norm", "step"});
  for (const auto& row : trace.rows)
    csv.row({static_cast<double>(row.iter), row.energy, row.grad_norm, row.step});

  const std::string field_path = out_path(c, "relaxed_displacement.json");
  std::ofstream(field_path) << displacement_to_json(trace.u1, trace.u2).dump(2) << "\n";

  ExperimentResult res;
  res.summary = {{"experiment", "relax"},
                 {"inputs", l.inputs},
                 {"converged", trace.converged},
                 {"iterations", trace.iterations},
                 {"final_energy_mev", trace.rows.back().energy},
                 {"final_grad_norm", trace.rows.back().grad_norm},
                 {"epsilon_scale", trace.epsilon_scale},
                 {"max_inplane_displacement_bound",
                  std::max(trace.u1.sup_norm_bound_inplane(),
                           trace.u2.sup_norm_bound_inplane())}};
  res.outputs.push_back(trace_path);
  res.outputs.push_back(field_path);
  return res;
}

inline ExperimentResult run_profile(const ExperimentConfig& c) {
  Loaded l = load_geometry(c);
  const auto& g = l.geo.geometry;
  const auto fields = load_displacement(c, l.inputs, l.geo);

  auto frac = [&](const char* key, const Vec2& fallback) {
    if (!c.params.contains(key)) return fallback;
    return io_detail::vec2_from(c.params[key], std::string("config.params.") + key);
  };
  // default: the cell diagonal through AB and BA stacking
  const Vec2 f0 = frac("from_frac", Vec2(0.0, 0.0));
  const Vec2 f1 = frac("to_frac", Vec2(1.0, 1.0));
  const long k = c.params.value("samples", 129L);

  const Vec2 x0 = g.A_M * f0;
  const Vec2 x1 = g.A_M * f1;
  const auto samples = domain_wall_profile(g, fields.u1, fields.u2, x0, x1, k);

  const std::string path = out_path(c, "profile.csv");
  CsvWriter csv(path);
  csv.comment("modulated disregistry D_{1->2} x + u1(x) - u2(x) along the segment");
  csv.header({"t", "x", "y", "d_x", "d_y", "d_z"});
  double max_slope = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    csv.row({s.t, s.x[0], s.x[1], s.d[0], s.d[1], s.dz});
    if (i > 0) {
      const double dt = samples[i].t - samples[i - 1].t;
      if (dt > 0)
        max_slope = std::max(max_slope, (samples[i].d - samples[i - 1].d).norm() / dt);
    }
  }

  ExperimentResult res;
  res.summary = {{"experiment", "profile"},
                 {"inputs", l.inputs},
                 {"samples", k},
                 {"max_inplane_slope", max_slope}};
  res.outputs.push_back(path);
  return res;
}

}  // namespace exp_detail

/// Dispatches one experiment; writes its artifacts plus a summary JSON named
/// <kind>_summary.json into the out directory.  Outputs are deterministic for
/// a fixed config (no timestamps, fixed-seed randomness, order-independent
/// reductions).
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  ExperimentResult res;
  if (c.kind == "geometry")
    res = exp_detail::run_geometry(c);
  else if (c.kind == "dirichlet")
    res = exp_detail::run_dirichlet(c);
  else if (c.kind == "diophantine")
    res = exp_detail::run_diophantine(c);
  else if (c.kind == "converge")
    res = exp_detail::run_converge(c);
  else if (c.kind == "misfit")
    res = exp_detail::run_misfit(c);
  else if (c.kind == "energy")
    res = exp_detail::run_energy(c);
  else if (c.kind == "relax")
    res = exp_detail::run_relax(c);
  else if (c.kind == "profile")
    res = exp_detail::run_profile(c);
  else
    throw ValidationError("run_experiment: unknown kind '" + c.kind + "'");

  const std::string summary_path = exp_detail::out_path(c, c.kind + "_summary.json");
  std::ofstream(summary_path) << res.summary.dump(2) << "\n";
  res.outputs.push_back(summary_path);
  return res;
}

}  // namespace moire
