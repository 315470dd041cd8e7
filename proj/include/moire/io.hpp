#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "moire/displacement.hpp"
#include "moire/energy.hpp"

namespace moire {

using Json = nlohmann::json;

/// FNV-1a 64-bit content hash, hex encoded; identifies input files in the
/// reproducibility summary.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// 17-significant-digit decimal rendering; round-trips doubles exactly.
inline std::string format_full(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

/// Deterministic CSV emitter (no timestamps; identical inputs give
/// byte-identical files).
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ValidationError("cannot open output file: " + path);
  }
  void comment(const std::string& line) { out_ << "# " << line << "\n"; }
  void header(const std::vector<std::string>& names) {
    for (size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
    out_ << "\n";
  }
  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i)
      out_ << (i ? "," : "") << format_full(values[i]);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

namespace io_detail {

inline const Json& require(const Json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(where + ": missing field '" + key + "'");
  return *it;
}

inline Mat2 mat2_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 ||
      j[1].size() != 2)
    throw ValidationError(where + ": expected a 2x2 array");
  Mat2 m;
  m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(),
      j[1][1].get<double>();
  return m;
}

inline Vec2 vec2_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2)
    throw ValidationError(where + ": expected a 2-vector");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

}  // namespace io_detail

/// Geometry file schema:
/// { A: [[..],[..]], theta_deg, q,
///   sublattices: {layer1: [{label, tau: [x,y]}], layer2: [...]},
///   gamma: {layer1: [x,y], layer2: [x,y]} }
/// Lengths are in angstrom, the angle in degrees (converted to radians here).
struct GeometryBundle {
  BilayerGeometry geometry;
  SublatticeSpec sublattices;
};

inline GeometryBundle geometry_from_json(const Json& j) {
  const Mat2 A = io_detail::mat2_from(io_detail::require(j, "A", "geometry"), "geometry.A");
  const double theta = io_detail::require(j, "theta_deg", "geometry").get<double>() * pi / 180.0;
  const double q = io_detail::require(j, "q", "geometry").get<double>();

  GeometryBundle b;
  b.geometry = build_geometry(A, theta, q);

  if (j.contains("sublattices")) {
    const Json& s = j["sublattices"];
    auto parse_layer = [&](const char* key) {
      std::vector<Sublattice> out;
      if (!s.contains(key)) return out;
      for (const auto& entry : s[key]) {
        Sublattice sub;
        sub.label = io_detail::require(entry, "label", "geometry.sublattices").get<std::string>();
        sub.tau = io_detail::vec2_from(io_detail::require(entry, "tau", "geometry.sublattices"),
                                       "geometry.sublattices.tau");
        if (!sub.tau.allFinite())
          throw ValidationError("geometry.sublattices.tau: shift must be finite");
        out.push_back(sub);
      }
      return out;
    };
    auto l1 = parse_layer("layer1");
    auto l2 = parse_layer("layer2");
    if (!l1.empty()) b.sublattices.layer1 = std::move(l1);
    if (!l2.empty()) b.sublattices.layer2 = std::move(l2);
    for (int j_layer : {1, 2}) {
      const auto& list = b.sublattices.layer(j_layer);
      for (size_t i = 0; i < list.size(); ++i)
        for (size_t k = i + 1; k < list.size(); ++k)
          if (list[i].label == list[k].label)
            throw ValidationError("geometry.sublattices: duplicate label '" + list[i].label +
                                  "'");
    }
  }
  if (j.contains("gamma")) {
    const Json& gam = j["gamma"];
    if (gam.contains("layer1"))
      b.sublattices.gamma1 = io_detail::vec2_from(gam["layer1"], "geometry.gamma.layer1");
    if (gam.contains("layer2"))
      b.sublattices.gamma2 = io_detail::vec2_from(gam["layer2"], "geometry.gamma.layer2");
    for (int j_layer : {1, 2}) {
      const Vec2 c = b.geometry.layer_basis_inv(j_layer) * b.sublattices.gamma(j_layer);
      if (c[0] < 0.0 || c[0] >= 1.0 || c[1] < 0.0 || c[1] >= 1.0)
        throw ValidationError("geometry.gamma.layer" + std::to_string(j_layer) +
                              ": shift must lie in the half-open unit cell");
    }
  }
  return b;
}

inline Json geometry_to_json(const BilayerGeometry& g, const SublatticeSpec& subl) {
  Json j;
  j["A"] = {{g.A(0, 0), g.A(0, 1)}, {g.A(1, 0), g.A(1, 1)}};
  j["theta_deg"] = g.theta * 180.0 / pi;
  j["q"] = g.q;
  Json subs;
  for (int layer : {1, 2}) {
    Json list = Json::array();
    for (const auto& s : subl.layer(layer))
      list.push_back({{"label", s.label}, {"tau", {s.tau[0], s.tau[1]}}});
    subs[layer == 1 ? "layer1" : "layer2"] = list;
  }
  j["sublattices"] = subs;
  j["gamma"] = {{"layer1", {subl.gamma1[0], subl.gamma1[1]}},
                {"layer2", {subl.gamma2[0], subl.gamma2[1]}}};
  return j;
}

/// Potential file schema: {variant, params: {...}, core_radius_angstrom,
/// decay_exponent_r}.  Tabulated profiles read a two-column (radius, value)
/// CSV given by params.csv_file (resolved against base_dir).
inline PairPotential potential_from_json(const Json& j, const std::string& base_dir = ".") {
  const std::string variant =
      io_detail::require(j, "variant", "potential").get<std::string>();
  const double core = j.value("core_radius_angstrom", 0.5);
  const double decay_r = j.value("decay_exponent_r", 1.5);
  const Json params = j.value("params", Json::object());
  auto need = [&](const char* key) -> double {
    if (!params.contains(key))
      throw ValidationError(std::string("potential.params: missing '") + key + "'");
    return params[key].get<double>();
  };

  if (variant == "morse")
    return PairPotential::morse(need("E0_mev"), need("kappa0_inv_angstrom"),
                                need("r0_angstrom"), core, decay_r);
  if (variant == "lennard_jones")
    return PairPotential::lennard_jones(need("eps0_mev"), need("sigma_angstrom"), core,
                                        decay_r);
  if (variant == "gaussian")
    return PairPotential::gaussian(need("amplitude_mev"), need("width_angstrom"), decay_r);
  if (variant == "product_xy_z") {
    auto rule_from = [&](const Json& r, const char* where) -> RadialRulePtr {
      const std::string kind = io_detail::require(r, "rule", where).get<std::string>();
      if (kind == "morse")
        return std::make_shared<MorseRule>(r["E0_mev"].get<double>(),
                                           r["kappa0_inv_angstrom"].get<double>(),
                                           r["r0_angstrom"].get<double>());
      if (kind == "lennard_jones")
        return std::make_shared<LennardJonesRule>(r["eps0_mev"].get<double>(),
                                                  r["sigma_angstrom"].get<double>());
      if (kind == "gaussian")
        return std::make_shared<GaussianRule>(r["amplitude_mev"].get<double>(),
                                              r["width_angstrom"].get<double>());
      throw ValidationError(std::string(where) + ": unknown rule '" + kind + "'");
    };
    return PairPotential::product_xy_z(
        rule_from(io_detail::require(j, "horizontal", "potential"), "potential.horizontal"),
        rule_from(io_detail::require(j, "vertical", "potential"), "potential.vertical"), core,
        decay_r);
  }
  if (variant == "tabulated") {
    const std::string file =
        io_detail::require(params, "csv_file", "potential.params").get<std::string>();
    const std::string path =
        (std::filesystem::path(base_dir) / file).string();
    std::ifstream in(path);
    if (!in) throw ValidationError("potential.params.csv_file: cannot open " + path);
    std::vector<double> radii, values;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double r, v;
      if (ss >> r >> v) {
        radii.push_back(r);
        values.push_back(v);
      }
    }
    return PairPotential::tabulated(radii, values, params.value("interpolation_order", 3),
                                    core, decay_r);
  }
  throw ValidationError("potential.variant: unknown variant '" + variant + "'");
}

/// Displacement file schema:
/// { n_cut, fields: [ {layer, sublattice, modes: [{n: [i,j],
///   c: [[re,im],[re,im],[re,im]]}]} ] }
struct DisplacementBundle {
  DisplacementField u1, u2;
};

inline DisplacementBundle displacement_from_json(const Json& j, const BilayerGeometry& g,
                                                 int sublattices1, int sublattices2) {
  const int n_cut = io_detail::require(j, "n_cut", "displacement").get<int>();
  DisplacementBundle b{DisplacementField(g, n_cut, sublattices1),
                       DisplacementField(g, n_cut, sublattices2)};
  for (const auto& block : io_detail::require(j, "fields", "displacement")) {
    const int layer = io_detail::require(block, "layer", "displacement.fields").get<int>();
    if (layer != 1 && layer != 2)
      throw ValidationError("displacement.fields.layer: must be 1 or 2");
    const int alpha = block.value("sublattice", 0);
    DisplacementField& u = (layer == 1) ? b.u1 : b.u2;
    if (alpha < 0 || alpha >= u.sublattice_count())
      throw ValidationError("displacement.fields.sublattice: index out of range");
    for (const auto& mode : io_detail::require(block, "modes", "displacement.fields")) {
      const Json& n = io_detail::require(mode, "n", "displacement.modes");
      const Json& c = io_detail::require(mode, "c", "displacement.modes");
      if (!n.is_array() || n.size() != 2 || !c.is_array() || c.size() != 3)
        throw ValidationError("displacement.modes: expected n: [i,j] and c: 3 x [re,im]");
      Vec3c coeff;
      for (int k = 0; k < 3; ++k)
        coeff[k] = Complex(c[k][0].get<double>(), c[k][1].get<double>());
      u.set_mode(alpha, Index2(n[0].get<long>(), n[1].get<long>()), coeff);
    }
  }
  return b;
}

inline Json displacement_to_json(const DisplacementField& u1, const DisplacementField& u2) {
  Json j;
  j["n_cut"] = std::max(u1.n_cut(), u2.n_cut());
  Json fields = Json::array();
  for (int layer : {1, 2}) {
    const DisplacementField& u = (layer == 1) ? u1 : u2;
    for (int alpha = 0; alpha < u.sublattice_count(); ++alpha) {
      Json modes = Json::array();
      for (const auto& m : u.modes(alpha)) {
        modes.push_back({{"n", {m.n[0], m.n[1]}},
                         {"c",
                          {{m.c[0].real(), m.c[0].imag()},
                           {m.c[1].real(), m.c[1].imag()},
                           {m.c[2].real(), m.c[2].imag()}}}});
      }
      fields.push_back({{"layer", layer}, {"sublattice", alpha}, {"modes", modes}});
    }
  }
  j["fields"] = fields;
  return j;
}

/// Moduli file schema: {layer1: {lambda_mev, mu_mev}, layer2: {...}}.
inline std::pair<ElasticModuli, ElasticModuli> moduli_from_json(const Json& j) {
  auto one = [&](const char* key) {
    const Json& m = io_detail::require(j, key, "moduli");
    ElasticModuli e{io_detail::require(m, "lambda_mev", "moduli").get<double>(),
                    io_detail::require(m, "mu_mev", "moduli").get<double>()};
    e.validate();
    return e;
  };
  return {one("layer1"), one("layer2")};
}

}  // namespace moire
