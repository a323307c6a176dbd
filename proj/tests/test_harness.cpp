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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "omc/harness.hpp"
#include "omc/io.hpp"
#include "omc/plots.hpp"

using namespace omc;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_mog(std::size_t seeds = 20) {
  ExperimentConfig c = default_config("mog_base", 2);
  c.seeds = seeds;
  c.sampling.candidates = 2000;
  c.sampling.final_count = 1000;
  c.repetitions = 1;
  c.evaluate = false;
  return c;
}

std::string weighted_csv(const InferenceResult& r) {
  std::ostringstream os;
  write_weighted_csv(os, r.weighted);
  write_samples_csv(os, r.samples);
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("omc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SweepRow row(const std::string& problem, std::size_t d, std::size_t s, double c2st, double runtime = 1.0) {
  SweepRow r;
  r.problem = problem;
  r.dim = d;
  r.seeds = s;
  r.c2st = c2st;
  r.runtime_seconds = runtime;
  return r;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Inference, SmokeRunProducesRequestedDraws) {
  const auto problem = make_problem("mog_base");
  const auto res = run_inference(problem, small_mog(), Rng(1));
  EXPECT_EQ(res.samples.size(), 1000u);
  EXPECT_EQ(res.weighted.size(), 2000u);
  EXPECT_EQ(res.records.size(), 20u);
  EXPECT_EQ(res.boxes, res.accepted_records);
  EXPECT_GT(res.ess, 1.0);
  for (const auto& s : res.samples) EXPECT_TRUE(problem.sim().prior().contains(s));
}

TEST(Inference, SingleSeedGivesOneBox) {
  const auto problem = make_problem("mog_base");
  ExperimentConfig c = small_mog(1);
  c.pcg_to_keep = 1.0;
  const auto res = run_inference(problem, c, Rng(2));
  EXPECT_EQ(res.accepted_records, 1u);
  EXPECT_EQ(res.boxes, 1u);
  // Every candidate comes from the one box, so its density is constant.
  for (const auto& w : res.weighted) EXPECT_EQ(w.log_proposal_density, res.weighted.front().log_proposal_density);
}

TEST(Inference, ByteIdenticalAcrossRunsAndWorkerCounts) {
  const auto problem = make_problem("mog_two");
  const ExperimentConfig c = small_mog(30);
  set_worker_count(1);
  const std::string a = weighted_csv(run_inference(problem, c, Rng(3)));
  const std::string b = weighted_csv(run_inference(problem, c, Rng(3)));
  set_worker_count(4);
  const std::string d = weighted_csv(run_inference(problem, c, Rng(3)));
  set_worker_count(0);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, d);
  EXPECT_NE(a, weighted_csv(run_inference(problem, c, Rng(4))));
}

TEST(Inference, LedgerIsConsistent) {
  const auto problem = make_problem("mog_base_dist");
  const ExperimentConfig c = small_mog(10);
  const auto res = run_inference(problem, c, Rng(5));
  const auto& l = res.ledger;
  EXPECT_EQ(l.vectorized_calls, l.mask_calls + l.optimizer_calls + l.line_search_calls + l.indicator_calls);
  EXPECT_EQ(l.mask_calls, c.mask.n_noise);
  EXPECT_EQ(l.optimizer_calls, c.optimizer.steps + 1);
  EXPECT_EQ(l.indicator_calls, res.accepted_records);
  EXPECT_GE(l.instance_evaluations, l.vectorized_calls);
  EXPECT_GT(l.gradient_evaluations, 0u);
  EXPECT_EQ(res.mask.active_count(), 2u);
}

TEST(Inference, InvalidConfigIsRejected) {
  ExperimentConfig c = small_mog();
  c.pcg_to_keep = 0.0;
  EXPECT_THROW(run_inference(make_problem("mog_base"), c, Rng(6)), ConfigError);
  EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST(Config, StrictKeys) {
  ExperimentConfig c;
  EXPECT_THROW(apply_json(c, Json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(apply_json(c, Json{{"optimizer", {{"lr", 0.1}}}}), ConfigError);
  EXPECT_THROW(apply_json(c, Json{{"epsilon", "twice"}}), ConfigError);
  EXPECT_THROW(apply_json(c, Json{{"seeds", "many"}}), ConfigError);
  EXPECT_THROW(apply_json(c, Json{{"indicator", "maybe"}}), ConfigError);
}

TEST(Config, ProblemResetsDefaultsThenFieldsOverride) {
  ExperimentConfig c;
  apply_json(c, Json{{"problem", "two_moons"}, {"seeds", 7}, {"epsilon", "twice_worst_accepted"},
                     {"optimizer", {{"steps", 3}}}});
  EXPECT_EQ(c.problem, "two_moons");
  EXPECT_EQ(c.seeds, 7u);
  EXPECT_EQ(c.optimizer.steps, 3u);
  EXPECT_EQ(c.optimizer.learning_rate, default_config("two_moons").optimizer.learning_rate);
  EXPECT_EQ(c.epsilon.mode, EpsilonMode::kTwiceWorstAccepted);
}

TEST(Config, LoadFromFile) {
  const fs::path dir = scratch_dir("config");
  std::ofstream(dir / "good.json") << R"({"problem": "mog_two", "dim": 4, "candidates": 99})";
  std::ofstream(dir / "bad.json") << "{ not json";
  const auto c = load_config((dir / "good.json").string());
  EXPECT_EQ(c.problem_options.dim, 4u);
  EXPECT_EQ(c.sampling.candidates, 99u);
  EXPECT_THROW(load_config((dir / "bad.json").string()), ConfigError);
  EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
}

TEST(Experiment, ReportAndFilesAreWritten) {
  const fs::path dir = scratch_dir("experiment");
  ExperimentConfig c = small_mog();
  c.evaluate = true;
  c.sampling.final_count = 200;
  c.c2st.epochs = 20;
  c.out_dir = (dir / "out").string();
  c.oracle_cache = (dir / "cache").string();
  const RunReport rep = run_experiment(c);
  ASSERT_TRUE(rep.all_ok());
  ASSERT_TRUE(rep.mean_c2st().has_value());
  EXPECT_TRUE(fs::exists(dir / "out" / "samples_rep0.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "weighted_rep0.csv"));
  EXPECT_FALSE(fs::is_empty(dir / "cache"));
  std::ifstream is(dir / "out" / "report.json");
  const Json j = Json::parse(is);
  for (const char* key : {"config", "repetitions", "mean_c2st", "mean_runtime_seconds", "status"})
    EXPECT_TRUE(j.contains(key)) << key;
  const Json& r0 = j["repetitions"][0];
  for (const char* key : {"rep", "seed", "status", "mask", "acceptance", "epsilon", "weight_epsilon", "ess",
                          "c2st", "runtime_seconds", "budget"})
    EXPECT_TRUE(r0.contains(key)) << key;
  EXPECT_TRUE(r0["budget"].contains("vectorized_calls"));
  // A second run reuses the cached oracle samples and reproduces the score.
  EXPECT_EQ(run_experiment(c).mean_c2st(), rep.mean_c2st());
}

TEST(Experiment, FailedRepetitionIsReportedNotThrown) {
  ExperimentConfig c = small_mog();
  c.weight_epsilon = 1e-30;  // nothing can be weighted
  const RunReport rep = run_experiment(c);
  ASSERT_EQ(rep.repetitions.size(), 1u);
  EXPECT_FALSE(rep.all_ok());
  EXPECT_FALSE(rep.repetitions[0].error.empty());
}

TEST(Sweep, StopsAfterFirstSuccessfulBudget) {
  const fs::path dir = scratch_dir("sweep");
  SweepConfig sc;
  sc.problems = {"mog_base"};
  sc.dims = {2};
  sc.seeds = {40, 20};
  sc.repetitions = 2;
  sc.oracle_cache = (dir / "cache").string();
  sc.overrides = Json{{"candidates", 2000}, {"final", 200}, {"c2st", {{"epochs", 20}}}};
  const auto rows = run_sweep(sc);
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows.front().seeds, 20u);  // budgets run in increasing order
  const auto cells = summarize(rows);
  EXPECT_EQ(rows.size(), cells.size() * 2);
  for (std::size_t k = 0; k + 1 < cells.size(); ++k) EXPECT_GT(cells[k].mean_c2st, kSuccessThreshold);

  std::stringstream ss;
  write_sweep_csv(ss, rows);
  const auto back = read_sweep_csv(ss);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_EQ(back[0].seed, rows[0].seed);
  EXPECT_EQ(back[0].c2st, rows[0].c2st);
}

TEST(Sweep, CsvRejectsMalformedInput) {
  std::stringstream bad_header("a,b,c\n");
  EXPECT_THROW(read_sweep_csv(bad_header), IoError);
  std::stringstream short_row("problem,D,S,rep,seed,method,c2st,runtime_s,vectorized_calls,instance_evaluations\nx,1\n");
  EXPECT_THROW(read_sweep_csv(short_row), IoError);
  std::stringstream empty("");
  EXPECT_TRUE(read_sweep_csv(empty).empty());
}

TEST(Frontier, PicksSmallestSuccessfulBudget) {
  const std::vector<SweepRow> rows{row("p", 2, 100, 0.9), row("p", 2, 200, 0.7), row("p", 2, 400, 0.6),
                                   row("p", 4, 100, 0.95), row("p", 4, 800, 0.74), row("q", 2, 50, 0.8)};
  const auto f = extract_frontier(rows);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].dim, 2u);
  EXPECT_EQ(f[0].seeds, 200u);
  EXPECT_EQ(f[1].dim, 4u);
  EXPECT_EQ(f[1].seeds, 800u);
  const std::string svg = frontier_svg(rows);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(frontier_svg({row("q", 2, 50, 0.8)}).find("no cell reached the threshold"), std::string::npos);
}

TEST(Plots, HeatmapHasOneCellPerDimensionAndBudget) {
  const std::vector<SweepRow> rows{row("p", 2, 100, 0.9), row("p", 2, 200, 0.7), row("p", 8, 100, 0.95),
                                   row("p", 5, 400, 0.6)};
  const std::string svg = heatmap_svg(rows);
  EXPECT_EQ(count_of(svg, "class=\"cell\""), 3u * 3u);
  EXPECT_EQ(count_of(svg, ">n/a<"), 9u - 4u);
}

TEST(Plots, EmptyInputGivesNotice) {
  EXPECT_NE(heatmap_svg({}).find("no data"), std::string::npos);
  EXPECT_NE(frontier_svg({}).find("no data"), std::string::npos);
  EXPECT_NE(scatter_svg({}).find("no data"), std::string::npos);
  EXPECT_NE(scatter_svg({row("p", 2, 100, 0.9, 0.5)}).find("<circle"), std::string::npos);
}

TEST(Io, PgmRoundTrip) {
  const fs::path dir = scratch_dir("pgm");
  GrayImage img{3, 2, {0.0, 0.2, 0.4, 0.6, 1.0, 1.7}};
  write_pgm((dir / "x.pgm").string(), img);
  const GrayImage back = read_pgm((dir / "x.pgm").string());
  ASSERT_EQ(back.height, 3u);
  ASSERT_EQ(back.width, 2u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(back.pixels[k], img.pixels[k], 0.5 / 255.0 + 1e-12);
  EXPECT_EQ(back.pixels[5], 1.0);  // clipped
  EXPECT_THROW(read_pgm((dir / "none.pgm").string()), IoError);
}

TEST(Io, SamplesCsvRoundTrip) {
  const fs::path dir = scratch_dir("csv");
  std::vector<ParamVector> xs{Vector::Constant(3, 0.1), Vector::Constant(3, -2.5)};
  {
    std::ofstream os(dir / "s.csv");
    os << "# comment\n";
    write_samples_csv(os, xs);
  }
  const auto back = read_samples_csv((dir / "s.csv").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1], xs[1]);
}
