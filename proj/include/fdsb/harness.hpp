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

#pragma once

// Monte Carlo experiment driver: sweeps over power budgets and cluster
// choices, runs the selected algorithms on matched channel draws and
// aggregates the results.
//
// Seeds: trial t draws its topology and channels from derive_seed(seed, t),
// and every algorithm of that trial starts from the same derived streams, so
// adding or removing algorithms never changes any other run.

#include "fdsb/clustering.hpp"
#include "fdsb/partial_csi.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fdsb {

enum class Algorithm { sinrc_slbm, wmmse_slbm, heuristic, stochastic_sinrc, stochastic_wmmse, dlb, saa };

const char* to_string(Algorithm a);
/// Accepts the names printed by to_string; throws InvalidArgument otherwise.
Algorithm parse_algorithm(const std::string& name);
bool is_partial_csi(Algorithm a);

/// Cluster choice of one sweep point: full cooperation, the C strongest SBSs
/// per user, or the link-removal heuristic (full-CSI algorithms only).
struct ClusterChoice {
  enum class Kind { full, fixed, heuristic };
  Kind kind = Kind::full;
  int size = 0;  // C when kind == fixed

  static ClusterChoice full_cooperation() { return {}; }
  static ClusterChoice fixed_size(int c) { return {Kind::fixed, c}; }
  static ClusterChoice heuristic() { return {Kind::heuristic, 0}; }

  /// "full", "heuristic" or the decimal cluster size.
  std::string label() const;
  bool operator==(const ClusterChoice&) const = default;
};

struct SweepPoint {
  double mbs_power_dbm = 40.0;
  double sbs_power_dbm = 30.0;
  ClusterChoice cluster;
};

struct ExperimentSpec {
  std::string name = "experiment";
  NetworkConfig network;  // network.seed is replaced per trial
  std::vector<SweepPoint> sweep;
  std::vector<Algorithm> algorithms;
  int trials = 1;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  SlbmConfig slbm;        // surrogate_family is set by the algorithm
  SubsolverConfig subsolver;
  StochConfig stochastic;  // surrogate_family is set by the algorithm
  ClusteringConfig clustering;
  int saa_samples = 50;
  int eval_sample_count = 200;
  bool write_traces = true;
  bool compare_csi = false;  // the `preset` command runs compare_partial_csi when set

  void validate() const;
};

/// One (trial, sweep point, algorithm) cell.
struct RunRecord {
  Algorithm algorithm = Algorithm::sinrc_slbm;
  int point = 0;
  int trial = 0;
  std::uint64_t trial_seed = 0;
  bool failed = false;
  std::string error;
  double objective = 0.0;  // the run's own objective at its final point
  double metric = 0.0;     // figure of merit (partial CSI: fresh-sample mean)
  bool converged = false;
  int outer_iterations = 0;
  long inner_iterations = 0;
  double wall_ms = 0.0;
  Clustering clustering;
  std::vector<double> access_rates;
  std::vector<double> backhaul_rates;
  std::vector<double> end_to_end_rates;
  std::vector<TraceRow> trace;

  /// "<algorithm>_p<point>_t<trial>"
  std::string id() const;
};

/// Aggregate over the trials of one (algorithm, sweep point).
struct ResultRow {
  Algorithm algorithm = Algorithm::sinrc_slbm;
  int point = 0;
  SweepPoint sweep;
  int runs = 0;    // successful runs
  int failed = 0;  // failed runs
  double mean_sum_rate = 0.0;
  double std_error = 0.0;
  double mean_iterations = 0.0;
  double mean_wall_ms = 0.0;
};

struct ResultTable {
  std::vector<ResultRow> rows;  // sorted by (algorithm name, point index)
  std::vector<RunRecord> runs;  // sorted by (trial, point, algorithm)

  int failed_cells() const;
  /// More than 1% of the cells failed.
  bool failed_overall() const;
};

/// Percentage of the full-CSI SINRC-SLBM mean achieved by a partial-CSI
/// algorithm at one sweep point, over matched trials.
struct CsiComparisonRow {
  Algorithm algorithm = Algorithm::stochastic_sinrc;
  int point = 0;
  SweepPoint sweep;
  int trials = 0;  // trials where both runs succeeded
  double baseline_mean = 0.0;
  double partial_mean = 0.0;
  std::optional<double> percentage;  // empty when baseline_mean <= 0
};

/// Runs one cell. Solver errors are caught and recorded in the result.
RunRecord run_cell(const ExperimentSpec& spec, int point, int trial, Algorithm algorithm);

/// Runs every cell, `workers` trials at a time. Output is independent of
/// `workers`.
ResultTable run_experiment(const ExperimentSpec& spec, int workers = 1);

/// Requires sinrc_slbm and at least one partial-CSI algorithm in the table.
std::vector<CsiComparisonRow> compare_partial_csi(const ExperimentSpec& spec, const ResultTable& table);

// ---------------------------------------------------------------------------
// Output

inline constexpr const char* kResultsCsvHeader =
    "algorithm,mbs_power_dbm,sbs_power_dbm,cluster,runs,failed,mean_sum_rate,std_error,mean_iterations";
inline constexpr const char* kTimingsCsvHeader = "algorithm,mbs_power_dbm,sbs_power_dbm,cluster,runs,mean_wall_ms";
inline constexpr const char* kRunRatesCsvHeader =
    "algorithm,point,trial,user,access_rate,backhaul_rate,end_to_end_rate";
inline constexpr const char* kCsiCsvHeader =
    "algorithm,mbs_power_dbm,sbs_power_dbm,cluster,trials,baseline_mean,partial_mean,percentage";

void write_results_csv(std::ostream& os, const ResultTable& table);
void write_timings_csv(std::ostream& os, const ResultTable& table);
void write_run_rates_csv(std::ostream& os, const ResultTable& table);
void write_csi_csv(std::ostream& os, const std::vector<CsiComparisonRow>& rows);
/// JSON summary (see schemas/summary.schema.json); contains no wall times
/// and no output directory.
std::string summary_json(const ExperimentSpec& spec, const ResultTable& table,
                         const std::vector<CsiComparisonRow>* csi = nullptr);

/// Writes results.csv, timings.csv, rates.csv, summary.json, optionally
/// csi_comparison.csv and (when spec.write_traces) trace_<id>.csv into dir.
void write_outputs(const std::string& dir, const ExperimentSpec& spec, const ResultTable& table,
                   const std::vector<CsiComparisonRow>* csi = nullptr);

// ---------------------------------------------------------------------------
// Spec files (JSON)

ExperimentSpec parse_experiment_spec(const std::string& json_text);
ExperimentSpec load_experiment_spec(const std::string& path);
std::string experiment_spec_json(const ExperimentSpec& spec);

}  // namespace fdsb
