/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 fdsb contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fdsb/fdsb.hpp"
#include "fdsb/harness.hpp"

#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fdsb;

namespace {

// Small network so each cell takes milliseconds.
std::string spec_text(const std::string& algorithms, const std::string& sweep, int trials = 2) {
  return R"({
    "name": "unit", "seed": 3, "trials": )" + std::to_string(trials) + R"(,
    "network": {"region_side_m": 600, "n_sbs": 2, "n_users_scheduled": 2, "mbs_antennas": 4,
                "sbs_tx_antennas": 2, "mbs_exclusion_m": 150},
    "sweep": )" + sweep + R"(,
    "algorithms": )" + algorithms + R"(,
    "stochastic": {"max_iters": 5},
    "saa_samples": 5,
    "eval_sample_count": 20,
    "write_traces": true
  })";
}

const std::string kOnePoint = R"([{"mbs_power_dbm": 40, "sbs_power_dbm": 30, "cluster": "full"}])";

std::string results_csv(const ResultTable& t) {
  std::ostringstream os;
  write_results_csv(os, t);
  return os.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("spec parsing: array and grid sweeps") {
  const ExperimentSpec a = parse_experiment_spec(spec_text(R"(["sinrc-slbm"])", kOnePoint));
  CHECK(a.name == "unit");
  CHECK(a.trials == 2);
  CHECK(a.seed == 3);
  CHECK(a.network.n_sbs == 2);
  REQUIRE(a.sweep.size() == 1);
  CHECK(a.sweep[0].cluster == ClusterChoice::full_cooperation());
  CHECK(a.stochastic.max_iters == 5);

  const ExperimentSpec g = parse_experiment_spec(spec_text(
      R"(["sinrc-slbm"])", R"({"mbs_power_dbm": [30, 40], "sbs_power_dbm": [20, 30], "cluster": ["full", 2]})"));
  REQUIRE(g.sweep.size() == 8);
  // MBS power outermost, cluster choice innermost.
  CHECK(g.sweep[0].mbs_power_dbm == 30);
  CHECK(g.sweep[0].sbs_power_dbm == 20);
  CHECK(g.sweep[0].cluster == ClusterChoice::full_cooperation());
  CHECK(g.sweep[1].cluster == ClusterChoice::fixed_size(2));
  CHECK(g.sweep[2].sbs_power_dbm == 30);
  CHECK(g.sweep[4].mbs_power_dbm == 40);
  CHECK(g.sweep[7].cluster.label() == "2");

  const ExperimentSpec h = parse_experiment_spec(spec_text(
      R"(["heuristic", "wmmse-slbm"])", R"([{"mbs_power_dbm": 40, "sbs_power_dbm": 30, "cluster": "heuristic"}])"));
  CHECK(h.sweep[0].cluster.kind == ClusterChoice::Kind::heuristic);
  CHECK(h.algorithms == std::vector<Algorithm>{Algorithm::heuristic, Algorithm::wmmse_slbm});
}

TEST_CASE("spec parsing is strict") {
  const std::string ok = spec_text(R"(["sinrc-slbm"])", kOnePoint);
  CHECK_NOTHROW(parse_experiment_spec(ok));
  auto with = [&](const std::string& from, const std::string& to) {
    std::string s = ok;
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, from.size(), to);
  };
  CHECK_THROWS_AS(parse_experiment_spec(with(R"("trials": 2)", R"("trials": 2, "trails": 3)")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec(with(R"("n_sbs": 2)", R"("n_sbs": 2, "nsbs": 2)")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec(with(R"("trials": 2)", R"("trials": "2")")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec(with(R"("trials": 2)", R"("trials": 0)")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec(with(R"("trials": 2)", R"("trials": 1.5)")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec(with(R"(["sinrc-slbm"])", R"(["sinrc"])")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec(with(R"("cluster": "full")", R"("cluster": "all")")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec(with(R"("cluster": "full")", R"("cluster": 3)")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec(with(kOnePoint, "[]")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec(with(R"(["sinrc-slbm"])", "[]")), InvalidArgument);
  CHECK_THROWS_AS(parse_experiment_spec("{not json"), InvalidArgument);
  // Partial-CSI algorithms need a predetermined clustering.
  CHECK_THROWS_AS(parse_experiment_spec(with(R"(["sinrc-slbm"])", R"(["dlb"])").replace(
                      ok.find(R"("cluster": "full")"), 17, R"("cluster": "heuristic")")),
                  InvalidArgument);
  ExperimentSpec s = parse_experiment_spec(ok);
  s.algorithms = {Algorithm::dlb};
  s.sweep[0].cluster = ClusterChoice::heuristic();
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  try {
    parse_experiment_spec(with(R"("n_sbs": 2)", R"("n_sbs": 2, "nsbs": 2)"));
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("nsbs") != std::string::npos);
  }
}

TEST_CASE("spec files round-trip and presets load") {
  const ExperimentSpec a = parse_experiment_spec(spec_text(R"(["sinrc-slbm", "dlb"])", kOnePoint));
  const std::string once = experiment_spec_json(a);
  CHECK(experiment_spec_json(parse_experiment_spec(once)) == once);
  for (const char* name : {"smoke", "desk", "desk-csi", "full"}) {
    CAPTURE(name);
    const ExperimentSpec p = load_experiment_spec(std::string(FDSB_PRESET_DIR) + "/" + name + ".json");
    CHECK_NOTHROW(p.validate());
  }
  CHECK_THROWS_AS(load_experiment_spec("/nonexistent/spec.json"), InvalidArgument);
}

TEST_CASE("two trials, one point, one algorithm give one aggregated row") {
  const ExperimentSpec spec = parse_experiment_spec(spec_text(R"(["sinrc-slbm"])", kOnePoint));
  const ResultTable t = run_experiment(spec);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].runs == 2);
  CHECK(t.rows[0].failed == 0);
  REQUIRE(t.runs.size() == 2);
  const double m0 = t.runs[0].metric, m1 = t.runs[1].metric;
  CHECK(t.rows[0].mean_sum_rate == doctest::Approx((m0 + m1) / 2));
  CHECK(t.rows[0].std_error == doctest::Approx(std::abs(m0 - m1) / 2));
  CHECK(t.runs[0].id() == "sinrc-slbm_p0_t0");
  CHECK(t.runs[1].trial_seed == derive_seed(3, 1));
  CHECK_FALSE(t.failed_overall());
}

TEST_CASE("outputs are deterministic and independent of the worker count") {
  const ExperimentSpec spec = parse_experiment_spec(spec_text(
      R"(["sinrc-slbm", "wmmse-slbm", "dlb"])",
      R"({"mbs_power_dbm": [40], "sbs_power_dbm": [30], "cluster": ["full", 1]})", 3));
  const ResultTable a = run_experiment(spec, 1);
  const ResultTable b = run_experiment(spec, 1);
  const ResultTable c = run_experiment(spec, 3);
  CHECK(results_csv(a) == results_csv(b));
  CHECK(results_csv(a) == results_csv(c));
  CHECK(summary_json(spec, a) == summary_json(spec, c));
  CHECK(a.rows.size() == 6);

  // Dropping algorithms leaves the remaining runs untouched.
  ExperimentSpec only = spec;
  only.algorithms = {Algorithm::wmmse_slbm};
  const ResultTable o = run_experiment(only);
  for (const auto& r : o.runs) {
    const auto match = std::find_if(a.runs.begin(), a.runs.end(), [&](const RunRecord& x) {
      return x.algorithm == r.algorithm && x.point == r.point && x.trial == r.trial;
    });
    REQUIRE(match != a.runs.end());
    CHECK(match->metric == r.metric);
  }
}

TEST_CASE("result rows are sorted and carry the sweep point") {
  const ExperimentSpec spec = parse_experiment_spec(spec_text(
      R"(["wmmse-slbm", "heuristic", "sinrc-slbm"])",
      R"({"mbs_power_dbm": [30, 40], "sbs_power_dbm": [30], "cluster": ["full"]})", 1));
  const ResultTable t = run_experiment(spec);
  REQUIRE(t.rows.size() == 6);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const std::string a = to_string(t.rows[i - 1].algorithm), b = to_string(t.rows[i].algorithm);
    CHECK((a < b || (a == b && t.rows[i - 1].point < t.rows[i].point)));
  }
  CHECK(t.rows[0].algorithm == Algorithm::heuristic);
  CHECK(t.rows[1].sweep.mbs_power_dbm == 40);
}

TEST_CASE("partial-CSI comparison") {
  ExperimentSpec spec = parse_experiment_spec(spec_text(
      R"(["sinrc-slbm", "dlb", "saa", "stochastic-sinrc"])",
      R"({"mbs_power_dbm": [40], "sbs_power_dbm": [30], "cluster": ["full", 1]})", 2));
  const ResultTable t = run_experiment(spec);
  const auto rows = compare_partial_csi(spec, t);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.trials == 2);
    REQUIRE(r.percentage.has_value());
    CHECK(*r.percentage == doctest::Approx(100.0 * r.partial_mean / r.baseline_mean));
    // Zero unknown links: the partial-CSI methods see the full channel.
    if (r.sweep.cluster.kind == ClusterChoice::Kind::full) CHECK(std::abs(*r.percentage - 100.0) <= 1.0);
  }
  CHECK(rows[0].algorithm == Algorithm::dlb);  // sorted by algorithm name

  std::ostringstream os;
  write_csi_csv(os, rows);
  CHECK(first_line(os.str()) == kCsiCsvHeader);

  // Guards: a missing baseline or partial algorithm, and a non-positive baseline.
  ExperimentSpec no_base = spec;
  no_base.algorithms = {Algorithm::dlb};
  CHECK_THROWS_AS(compare_partial_csi(no_base, t), InvalidArgument);
  ExperimentSpec no_partial = spec;
  no_partial.algorithms = {Algorithm::sinrc_slbm};
  CHECK_THROWS_AS(compare_partial_csi(no_partial, t), InvalidArgument);
  ResultTable zero = t;
  for (auto& r : zero.runs)
    if (r.algorithm == Algorithm::sinrc_slbm) r.metric = 0.0;
  for (const auto& r : compare_partial_csi(spec, zero)) CHECK_FALSE(r.percentage.has_value());
  std::ostringstream z;
  write_csi_csv(z, compare_partial_csi(spec, zero));
  CHECK(z.str().find(",,") == std::string::npos);
}

TEST_CASE("failure accounting") {
  ResultTable t;
  t.runs.resize(100);
  t.runs[0].failed = true;
  CHECK(t.failed_cells() == 1);
  CHECK_FALSE(t.failed_overall());
  t.runs[1].failed = true;
  CHECK(t.failed_overall());
}

TEST_CASE("written outputs") {
  const ExperimentSpec spec = parse_experiment_spec(spec_text(R"(["sinrc-slbm", "dlb"])", kOnePoint, 1));
  const ResultTable t = run_experiment(spec);
  const auto csi = compare_partial_csi(spec, t);
  const auto dir = std::filesystem::temp_directory_path() / "fdsb_test_harness_out";
  std::filesystem::remove_all(dir);
  write_outputs(dir.string(), spec, t, &csi);
  auto slurp = [&](const char* f) {
    std::ifstream in(dir / f);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(first_line(slurp("results.csv")) == kResultsCsvHeader);
  CHECK(first_line(slurp("timings.csv")) == kTimingsCsvHeader);
  CHECK(first_line(slurp("rates.csv")) == kRunRatesCsvHeader);
  CHECK(first_line(slurp("csi_comparison.csv")) == kCsiCsvHeader);
  CHECK(first_line(slurp("trace_sinrc-slbm_p0_t0.csv")) == "iteration,objective,surrogate,elapsed_ms");
  CHECK(std::filesystem::exists(dir / "trace_dlb_p0_t0.csv"));
  // Two data rows (one per algorithm) and one rate row per user and run.
  const std::string results = slurp("results.csv");
  CHECK(std::count(results.begin(), results.end(), '\n') == 3);
  const std::string rates = slurp("rates.csv");
  CHECK(std::count(rates.begin(), rates.end(), '\n') == 1 + 2 * 2);

  const auto j = nlohmann::json::parse(slurp("summary.json"));
  CHECK(j["spec"]["name"] == "unit");
  CHECK(j["runs"].size() == 2);
  CHECK(j["runs"][0]["id"] == "sinrc-slbm_p0_t0");
  CHECK(j["runs"][0]["clustering"].size() == 2);
  CHECK(j["failed_cells"] == 0);
  CHECK(j.contains("csi_comparison"));
  CHECK(slurp("summary.json").find("wall") == std::string::npos);
  std::filesystem::remove_all(dir);
}
