// Experiment driver for the incommensurate-bilayer mechanics library.
//
// Usage: moire <experiment> --config cfg.json [--out DIR] [--threads K]
//               [--seed S] [file and parameter overrides]
// Exit codes: 0 success, 2 configuration error, 3 numerical error.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "moire/moire.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int threads = 1;
  long seed = -1;

  // config overrides
  std::string geometry, potential, displacement, moduli;
  double sigma = 0.0;
  long n_max = 0;
  long N = -1;
  long grid = 0;
  bool limit = false;
};

int run_kind(const std::string& kind, const CommonArgs& args) {
  moire::set_thread_count(args.threads);
  const std::string text = moire::read_file(args.config_path);
  moire::Json doc;
  try {
    doc = moire::Json::parse(text);
  } catch (const moire::Json::parse_error& e) {
    throw moire::ParseError(std::string("config: invalid JSON: ") + e.what());
  }

  if (!args.geometry.empty()) doc["geometry_file"] = args.geometry;
  if (!args.potential.empty()) doc["potential_file"] = args.potential;
  if (!args.displacement.empty()) doc["displacement_file"] = args.displacement;
  if (!args.moduli.empty()) doc["moduli_file"] = args.moduli;
  if (args.sigma > 0.0) doc["params"]["sigma"] = args.sigma;
  if (args.n_max > 0) doc["params"]["n_max"] = args.n_max;
  if (args.N >= 0) {
    doc["params"]["N"] = args.N;
    doc["params"]["limit"] = false;
  }
  if (args.grid > 0) doc["params"]["grid"] = args.grid;
  if (args.limit) doc["params"]["limit"] = true;

  const std::string base_dir =
      std::filesystem::path(args.config_path).parent_path().string();
  moire::ExperimentConfig config =
      moire::parse_config(doc.dump(), base_dir.empty() ? "." : base_dir, kind);
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (args.seed >= 0) config.seed = static_cast<unsigned long>(args.seed);

  const auto result = moire::run_experiment(config);
  for (const auto& path : result.outputs) std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mechanical-energy toolkit for incommensurate twisted bilayers"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {"geometry", "dirichlet", "diophantine", "converge",
                                          "misfit",   "energy",    "relax",       "profile"};
  std::map<std::string, CommonArgs> args;
  for (const auto& kind : kinds) {
    auto* sub = app.add_subcommand(kind, kind + " experiment");
    auto& a = args[kind];
    sub->add_option("--config", a.config_path, "experiment config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", a.out_dir, "output directory (overrides config)");
    sub->add_option("--threads", a.threads, "worker threads for the lattice sums");
    sub->add_option("--seed", a.seed, "seed for randomized probe observables");
    sub->add_option("--geometry", a.geometry, "geometry file (overrides config)");
    sub->add_option("--potential", a.potential, "potential file (overrides config)");
    sub->add_option("--displacement", a.displacement, "displacement file (overrides config)");
    sub->add_option("--moduli", a.moduli, "moduli file (overrides config)");
    if (kind == "diophantine") {
      sub->add_option("--sigma", a.sigma, "Diophantine exponent sigma > 1");
      sub->add_option("--nmax", a.n_max, "scan bound on |n|_inf");
    }
    if (kind == "energy") {
      sub->add_option("--N", a.N, "finite lattice truncation");
      sub->add_flag("--limit", a.limit, "thermodynamic-limit quadrature");
      sub->add_option("--grid", a.grid, "quadrature grid per axis");
    }
  }

  CLI11_PARSE(app, argc, argv);

  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    return run_kind(kind, args[kind]);
  } catch (const moire::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const moire::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
