// Copyright 2026 The omc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// omc: command-line front end for inference runs, budget sweeps, plots and
// oracle sample generation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omc/harness.hpp"
#include "omc/plots.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInference = 3;

// Flags shared by infer and sweep; unset options leave the config untouched.
struct CommonFlags {
  std::string config;
  std::optional<std::string> problem;
  std::optional<std::size_t> dim;
  std::optional<double> pcg;
  std::optional<std::string> epsilon;
  std::optional<std::size_t> candidates;
  std::optional<std::size_t> final_count;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> master_seed;
  std::optional<std::string> out;
  std::optional<std::string> oracle_cache;
  std::optional<std::size_t> workers;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file; flags override its values");
    app->add_option("--problem", problem, "problem id");
    app->add_option("--dim", dim, "parameter dimension (mog_* problems)");
    app->add_option("--pcg", pcg, "fraction of seeds kept per observation, in (0, 1]");
    app->add_option("--epsilon", epsilon, "acceptance threshold, or twice_worst_accepted");
    app->add_option("--candidates", candidates, "proposal draws P");
    app->add_option("--final", final_count, "resampled posterior draws M");
    app->add_option("--reps", reps, "repetitions");
    app->add_option("--master-seed", master_seed, "master random seed");
    app->add_option("--out", out, "output directory");
    app->add_option("--oracle-cache", oracle_cache, "directory for cached oracle samples");
    app->add_option("--workers", workers, "worker threads (results do not depend on it)");
  }

  // Config file first, then flags, in the order the JSON schema applies them.
  omc::Json overrides() const {
    omc::Json j = omc::Json::object();
    if (problem) j["problem"] = *problem;
    if (dim) j["dim"] = *dim;
    if (pcg) j["pcg_to_keep"] = *pcg;
    if (epsilon) {
      char* end = nullptr;
      const double v = std::strtod(epsilon->c_str(), &end);
      if (end && *end == '\0' && !epsilon->empty()) j["epsilon"] = v;
      else j["epsilon"] = *epsilon;
    }
    if (candidates) j["candidates"] = *candidates;
    if (final_count) j["final"] = *final_count;
    if (reps) j["repetitions"] = *reps;
    if (master_seed) j["master_seed"] = *master_seed;
    if (out) j["out"] = *out;
    if (oracle_cache) j["oracle_cache"] = *oracle_cache;
    return j;
  }

  omc::Json file_json() const {
    if (config.empty()) return omc::Json::object();
    std::ifstream is(config);
    if (!is) throw omc::ConfigError("cannot open config file " + config);
    try {
      return omc::Json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      throw omc::ConfigError("config file " + config + " is not valid JSON: " + e.what());
    }
  }

  void apply_workers() const {
    if (workers) omc::set_worker_count(static_cast<unsigned>(*workers));
  }
};

std::vector<std::size_t> parse_list(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoul(cell, &pos));
      if (pos != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw omc::ConfigError(std::string("bad ") + what + " list entry '" + cell + "'");
    }
  }
  if (out.empty()) throw omc::ConfigError(std::string("empty ") + what + " list");
  return out;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ','))
    if (!cell.empty()) out.push_back(cell);
  return out;
}

int cmd_infer(const CommonFlags& f, std::optional<std::size_t> seeds) {
  f.apply_workers();
  omc::ExperimentConfig cfg;
  omc::apply_json(cfg, f.file_json());
  omc::Json j = f.overrides();
  if (seeds) j["seeds"] = *seeds;
  omc::apply_json(cfg, j);
  const omc::RunReport report = omc::run_experiment(cfg);
  std::cout << report.to_json().dump(2) << '\n';
  return report.all_ok() ? kExitOk : kExitInference;
}

int cmd_sweep(const CommonFlags& f, const std::string& problems, const std::string& dims,
              const std::string& seeds, const std::string& results) {
  f.apply_workers();
  omc::SweepConfig sc;
  omc::Json base = f.file_json();
  omc::Json flags = f.overrides();
  if (!problems.empty()) sc.problems = split_names(problems);
  else if (flags.contains("problem")) sc.problems = {flags["problem"].get<std::string>()};
  else if (base.contains("problem")) sc.problems = {base["problem"].get<std::string>()};
  if (sc.problems.empty()) throw omc::ConfigError("sweep needs --problem or --problems");
  if (!dims.empty()) sc.dims = parse_list(dims, "D");
  else if (flags.contains("dim")) sc.dims = {flags["dim"].get<std::size_t>()};
  if (!seeds.empty()) sc.seeds = parse_list(seeds, "S");
  if (flags.contains("repetitions")) sc.repetitions = flags["repetitions"].get<std::size_t>();
  if (flags.contains("master_seed")) sc.master_seed = flags["master_seed"].get<std::uint64_t>();
  if (flags.contains("oracle_cache")) sc.oracle_cache = flags["oracle_cache"].get<std::string>();
  // Remaining keys are per-run overrides on top of each problem's defaults.
  for (auto* j : {&base, &flags})
    for (const char* k : {"problem", "dim", "repetitions", "master_seed", "oracle_cache", "out", "seeds"})
      j->erase(k);
  sc.overrides = base;
  sc.overrides.update(flags);
  const auto rows = omc::run_sweep(sc);
  std::ostringstream os;
  omc::write_sweep_csv(os, rows);
  if (results.empty() || results == "-") {
    std::cout << os.str();
  } else {
    const std::filesystem::path p(results);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    omc::write_text(p, os.str());
    std::cerr << "wrote " << rows.size() << " rows to " << results << '\n';
  }
  return kExitOk;
}

std::vector<omc::SweepRow> load_rows(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw omc::ConfigError("cannot open sweep csv " + path);
  return omc::read_sweep_csv(is);
}

void emit(const std::string& svg, const std::string& out) {
  if (out.empty() || out == "-") std::cout << svg;
  else omc::write_text(out, svg);
}

int cmd_oracle(const std::string& problem_id, std::size_t dim, std::size_t count, std::uint64_t seed,
               const std::string& cache, const std::string& out) {
  omc::ProblemOptions po;
  po.dim = dim;
  const omc::BenchmarkProblem problem = omc::make_problem(problem_id, po);
  std::vector<omc::ParamVector> samples;
  if (problem.ground_truth == omc::OracleKind::kAnalyticMean) {
    samples = {omc::analytic_posterior_mean(problem)};
  } else {
    samples = omc::cached_ground_truth(problem, count, seed, cache);
  }
  std::ostringstream os;
  os << "# omc oracle samples v1\n";
  omc::write_samples_csv(os, samples);
  emit(os.str(), out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimization Monte Carlo inference with robust hyperbox regions"};
  app.require_subcommand(1);

  CommonFlags infer_flags;
  std::optional<std::size_t> infer_seeds;
  auto* infer = app.add_subcommand("infer", "run inference repetitions and write samples and report.json");
  infer_flags.attach(infer);
  infer->add_option("--seeds", infer_seeds, "seeds S per observation");

  CommonFlags sweep_flags;
  std::string sweep_problems, sweep_dims, sweep_seeds, sweep_results;
  auto* sweep = app.add_subcommand("sweep", "budget sweep over D and S with early stopping");
  sweep_flags.attach(sweep);
  sweep->add_option("--problems", sweep_problems, "comma-separated problem ids");
  sweep->add_option("--dims", sweep_dims, "comma-separated D values");
  sweep->add_option("--seeds", sweep_seeds, "comma-separated S values");
  sweep->add_option("--results", sweep_results, "results CSV path (default stdout)");

  std::string plot_csv, plot_out, heat_problem;
  double threshold = omc::kSuccessThreshold;
  auto* frontier = app.add_subcommand("frontier", "SVG of the lowest successful budget per D");
  frontier->add_option("csv", plot_csv, "sweep results CSV")->required();
  frontier->add_option("-o,--out", plot_out, "SVG path (default stdout)");
  frontier->add_option("--threshold", threshold, "success threshold on mean C2ST");
  auto* heatmap = app.add_subcommand("heatmap", "SVG heatmap of mean C2ST over (D, S)");
  heatmap->add_option("csv", plot_csv, "sweep results CSV")->required();
  heatmap->add_option("-o,--out", plot_out, "SVG path (default stdout)");
  heatmap->add_option("--problem", heat_problem, "problem to plot (default: first in file)");
  auto* scatter = app.add_subcommand("scatter", "SVG scatter of C2ST against runtime");
  scatter->add_option("csv", plot_csv, "sweep results CSV")->required();
  scatter->add_option("-o,--out", plot_out, "SVG path (default stdout)");

  std::string oracle_problem = "two_moons", oracle_cache, oracle_out;
  std::size_t oracle_dim = 2, oracle_count = 1000;
  std::uint64_t oracle_seed = 0;
  auto* oracle = app.add_subcommand("oracle", "draw (or load cached) reference posterior samples");
  oracle->add_option("--problem", oracle_problem, "problem id");
  oracle->add_option("--dim", oracle_dim, "parameter dimension (mog_* problems)");
  oracle->add_option("--count", oracle_count, "number of samples");
  oracle->add_option("--seed", oracle_seed, "oracle seed");
  oracle->add_option("--oracle-cache", oracle_cache, "cache directory");
  oracle->add_option("--out", oracle_out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*infer) return cmd_infer(infer_flags, infer_seeds);
    if (*sweep) return cmd_sweep(sweep_flags, sweep_problems, sweep_dims, sweep_seeds, sweep_results);
    if (*frontier) return emit(omc::frontier_svg(load_rows(plot_csv), threshold), plot_out), kExitOk;
    if (*heatmap) return emit(omc::heatmap_svg(load_rows(plot_csv), heat_problem), plot_out), kExitOk;
    if (*scatter) return emit(omc::scatter_svg(load_rows(plot_csv)), plot_out), kExitOk;
    if (*oracle)
      return cmd_oracle(oracle_problem, oracle_dim, oracle_count, oracle_seed, oracle_cache, oracle_out);
  } catch (const omc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const omc::IoError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const omc::Error& e) {
    std::cerr << "inference failed: " << e.what() << '\n';
    return kExitInference;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
