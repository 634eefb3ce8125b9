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

#include "fdsb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace fdsb {

namespace {

constexpr std::pair<Algorithm, const char*> kAlgorithmNames[] = {
    {Algorithm::sinrc_slbm, "sinrc-slbm"},
    {Algorithm::wmmse_slbm, "wmmse-slbm"},
    {Algorithm::heuristic, "heuristic"},
    {Algorithm::stochastic_sinrc, "stochastic-sinrc"},
    {Algorithm::stochastic_wmmse, "stochastic-wmmse"},
    {Algorithm::dlb, "dlb"},
    {Algorithm::saa, "saa"},
};

// Shortest round-trip-safe text for a double; identical inputs give identical bytes.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

template <typename Real>
std::vector<double> to_std(const RVector<Real>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

template <typename Real>
void fill_from_trace(RunRecord& r, const RunTrace<Real>& tr) {
  r.objective = static_cast<double>(tr.objective);
  r.metric = static_cast<double>(tr.metric);
  r.converged = tr.converged;
  r.outer_iterations = tr.outer_iterations;
  r.inner_iterations = tr.inner_iterations;
  r.clustering = tr.clustering;
  r.access_rates = to_std(tr.rates.access);
  r.backhaul_rates = to_std(tr.rates.backhaul);
  r.end_to_end_rates = to_std(tr.rates.end_to_end);
  r.trace = tr.rows;
}

Clustering cluster_for(const ClusterChoice& c, const ChannelSet<double>& ch) {
  if (c.kind == ClusterChoice::Kind::fixed) return static_clustering(ch.large_scale, c.size);
  return Clustering::full(ch.n_users(), ch.n_sbs());
}

SurrogateFamily family_of(Algorithm a) {
  return a == Algorithm::wmmse_slbm || a == Algorithm::stochastic_wmmse ? SurrogateFamily::wmmse
                                                                         : SurrogateFamily::sinrc;
}

}  // namespace

const char* to_string(Algorithm a) {
  for (const auto& [alg, name] : kAlgorithmNames)
    if (alg == a) return name;
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (const auto& [alg, n] : kAlgorithmNames)
    if (name == n) return alg;
  throw InvalidArgument("unknown algorithm '" + name + "'");
}

bool is_partial_csi(Algorithm a) {
  return a == Algorithm::stochastic_sinrc || a == Algorithm::stochastic_wmmse || a == Algorithm::dlb ||
         a == Algorithm::saa;
}

std::string ClusterChoice::label() const {
  switch (kind) {
    case Kind::full: return "full";
    case Kind::heuristic: return "heuristic";
    default: return std::to_string(size);
  }
}

void ExperimentSpec::validate() const {
  const NetworkConfig net = with_default_weights(network);
  net.validate();
  require(trials >= 1, "ExperimentSpec: trials must be >= 1");
  require(!sweep.empty(), "ExperimentSpec: sweep must not be empty");
  require(!algorithms.empty(), "ExperimentSpec: algorithms must not be empty");
  require(std::set<Algorithm>(algorithms.begin(), algorithms.end()).size() == algorithms.size(),
          "ExperimentSpec: algorithms must be distinct");
  require(saa_samples >= 1, "ExperimentSpec: saa_samples must be >= 1");
  require(eval_sample_count >= 1, "ExperimentSpec: eval_sample_count must be >= 1");
  for (const auto& p : sweep) {
    if (p.cluster.kind == ClusterChoice::Kind::fixed)
      require(p.cluster.size >= 1 && p.cluster.size <= net.n_sbs, "ExperimentSpec: cluster size must lie in [1, N]");
    if (p.cluster.kind == ClusterChoice::Kind::heuristic)
      for (Algorithm a : algorithms)
        require(!is_partial_csi(a), "ExperimentSpec: partial-CSI algorithms need a predetermined clustering");
  }
  slbm.validate();
  subsolver.validate();
  stochastic.validate();
  require(clustering.j_delta >= 1 && clustering.j_delta <= net.n_sbs * net.n_users_scheduled,
          "ExperimentSpec: j_delta must lie in [1, K N]");
}

std::string RunRecord::id() const {
  return std::string(to_string(algorithm)) + "_p" + std::to_string(point) + "_t" + std::to_string(trial);
}

int ResultTable::failed_cells() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return r.failed; }));
}

bool ResultTable::failed_overall() const { return 100 * failed_cells() > static_cast<int>(runs.size()); }

RunRecord run_cell(const ExperimentSpec& spec, int point, int trial, Algorithm algorithm) {
  RunRecord r;
  r.algorithm = algorithm;
  r.point = point;
  r.trial = trial;
  r.trial_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(trial));
  const auto start = std::chrono::steady_clock::now();
  try {
    const SweepPoint& sp = spec.sweep.at(static_cast<std::size_t>(point));
    NetworkConfig cfg = with_default_weights(spec.network);
    cfg.seed = r.trial_seed;
    cfg.mbs_power_dbm = sp.mbs_power_dbm;
    cfg.sbs_power_dbm = sp.sbs_power_dbm;
    const ChannelSet<double> ch = generate_instance<double>(cfg);
    const RVector<double> weights = Eigen::Map<const RVector<double>>(cfg.weights.data(), cfg.n_users_scheduled);
    const auto budgets = PowerBudgets<double>::from_config(cfg);
    // Partial-CSI runs draw their start from stream 0 of run_seed; the
    // full-CSI runs use the same stream so matched cells share x0.
    const std::uint64_t run_seed = derive_seed(r.trial_seed, 1);
    const std::uint64_t init_seed = derive_seed(run_seed, 0);

    SlbmConfig slbm_cfg = spec.slbm;
    slbm_cfg.surrogate_family = family_of(algorithm);
    const bool heuristic = algorithm == Algorithm::heuristic || sp.cluster.kind == ClusterChoice::Kind::heuristic;
    if (!is_partial_csi(algorithm)) {
      const Clustering full = Clustering::full(ch.n_users(), ch.n_sbs());
      const DecodingOrder ord = make_decoding_order(ch, full);
      if (heuristic) {
        auto hr = heuristic_clustering(ch, ord, weights, budgets, slbm_cfg, spec.subsolver, spec.clustering, init_seed);
        fill_from_trace(r, hr.trace);
      } else {
        const Clustering cl = cluster_for(sp.cluster, ch);
        fill_from_trace(r, slbm(ch, cl, ord.rebind(cl), weights, budgets, slbm_cfg, spec.subsolver, std::nullopt,
                                init_seed));
      }
    } else {
      const Clustering cl = cluster_for(sp.cluster, ch);
      const ChannelSet<double> known = partial_csi_view(ch, cl);
      const DecodingOrder ord = partial_decoding_order(known, cl);
      switch (algorithm) {
        case Algorithm::dlb:
          fill_from_trace(r, dlb_slbm(known, cl, ord, weights, budgets, slbm_cfg, spec.subsolver,
                                      spec.eval_sample_count, run_seed));
          break;
        case Algorithm::saa:
          fill_from_trace(r, saa_slbm(known, cl, ord, weights, budgets, spec.saa_samples, slbm_cfg, spec.subsolver,
                                      spec.eval_sample_count, run_seed));
          break;
        default: {
          StochConfig st = spec.stochastic;
          st.surrogate_family = family_of(algorithm);
          st.eval_sample_count = spec.eval_sample_count;
          fill_from_trace(r, stochastic_slbm(known, cl, ord, weights, budgets, st, spec.subsolver, run_seed));
        }
      }
    }
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

ResultTable run_experiment(const ExperimentSpec& spec, int workers) {
  spec.validate();
  require(workers >= 1, "run_experiment: workers must be >= 1");
  const int P = static_cast<int>(spec.sweep.size());
  const int A = static_cast<int>(spec.algorithms.size());
  ResultTable table;
  table.runs.resize(static_cast<std::size_t>(spec.trials * P * A));

  std::atomic<int> next{0};
  std::mutex log_mutex;
  auto work = [&] {
    for (int t = next++; t < spec.trials; t = next++) {
      for (int p = 0; p < P; ++p)
        for (int a = 0; a < A; ++a) {
          RunRecord rec = run_cell(spec, p, t, spec.algorithms[static_cast<std::size_t>(a)]);
          if (rec.failed) {
            std::lock_guard<std::mutex> lock(log_mutex);
            std::cerr << "run " << rec.id() << " failed: " << rec.error << '\n';
          }
          table.runs[static_cast<std::size_t>((t * P + p) * A + a)] = std::move(rec);
        }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < std::min(workers, spec.trials); ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  for (int a = 0; a < A; ++a)
    for (int p = 0; p < P; ++p) {
      ResultRow row;
      row.algorithm = spec.algorithms[static_cast<std::size_t>(a)];
      row.point = p;
      row.sweep = spec.sweep[static_cast<std::size_t>(p)];
      std::vector<double> vals;
      double iters = 0.0, wall = 0.0;
      for (int t = 0; t < spec.trials; ++t) {
        const RunRecord& r = table.runs[static_cast<std::size_t>((t * P + p) * A + a)];
        if (r.failed) {
          ++row.failed;
          continue;
        }
        vals.push_back(r.metric);
        iters += r.outer_iterations;
        wall += r.wall_ms;
      }
      row.runs = static_cast<int>(vals.size());
      if (!vals.empty()) {
        const double n = static_cast<double>(vals.size());
        double sum = 0.0;
        for (double v : vals) sum += v;
        row.mean_sum_rate = sum / n;
        double ss = 0.0;
        for (double v : vals) ss += (v - row.mean_sum_rate) * (v - row.mean_sum_rate);
        row.std_error = vals.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        row.mean_iterations = iters / n;
        row.mean_wall_ms = wall / n;
      }
      table.rows.push_back(row);
    }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const ResultRow& x, const ResultRow& y) {
    const std::string nx = to_string(x.algorithm), ny = to_string(y.algorithm);
    return nx != ny ? nx < ny : x.point < y.point;
  });
  return table;
}

std::vector<CsiComparisonRow> compare_partial_csi(const ExperimentSpec& spec, const ResultTable& table) {
  const auto& algs = spec.algorithms;
  require(std::find(algs.begin(), algs.end(), Algorithm::sinrc_slbm) != algs.end(),
          "compare_partial_csi: the spec must include the full-CSI baseline sinrc-slbm");
  require(std::any_of(algs.begin(), algs.end(), is_partial_csi),
          "compare_partial_csi: the spec must include a partial-CSI algorithm");
  std::map<std::tuple<Algorithm, int, int>, const RunRecord*> cell;
  for (const auto& r : table.runs) cell[{r.algorithm, r.point, r.trial}] = &r;

  std::vector<CsiComparisonRow> out;
  for (Algorithm a : algs) {
    if (!is_partial_csi(a)) continue;
    for (int p = 0; p < static_cast<int>(spec.sweep.size()); ++p) {
      CsiComparisonRow row;
      row.algorithm = a;
      row.point = p;
      row.sweep = spec.sweep[static_cast<std::size_t>(p)];
      double base = 0.0, part = 0.0;
      for (int t = 0; t < spec.trials; ++t) {
        const auto b = cell.find({Algorithm::sinrc_slbm, p, t});
        const auto q = cell.find({a, p, t});
        if (b == cell.end() || q == cell.end() || b->second->failed || q->second->failed) continue;
        base += b->second->metric;
        part += q->second->metric;
        ++row.trials;
      }
      if (row.trials > 0) {
        row.baseline_mean = base / row.trials;
        row.partial_mean = part / row.trials;
        if (row.baseline_mean > 0.0) row.percentage = 100.0 * row.partial_mean / row.baseline_mean;
      }
      out.push_back(row);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const CsiComparisonRow& x, const CsiComparisonRow& y) {
    const std::string nx = to_string(x.algorithm), ny = to_string(y.algorithm);
    return nx != ny ? nx < ny : x.point < y.point;
  });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string point_columns(const SweepPoint& p) {
  return num(p.mbs_power_dbm) + ',' + num(p.sbs_power_dbm) + ',' + p.cluster.label();
}

}  // namespace

void write_results_csv(std::ostream& os, const ResultTable& table) {
  os << kResultsCsvHeader << '\n';
  for (const auto& r : table.rows)
    os << to_string(r.algorithm) << ',' << point_columns(r.sweep) << ',' << r.runs << ',' << r.failed << ','
       << num(r.mean_sum_rate) << ',' << num(r.std_error) << ',' << num(r.mean_iterations) << '\n';
}

void write_timings_csv(std::ostream& os, const ResultTable& table) {
  os << kTimingsCsvHeader << '\n';
  for (const auto& r : table.rows)
    os << to_string(r.algorithm) << ',' << point_columns(r.sweep) << ',' << r.runs << ',' << num(r.mean_wall_ms)
       << '\n';
}

void write_run_rates_csv(std::ostream& os, const ResultTable& table) {
  os << kRunRatesCsvHeader << '\n';
  for (const auto& r : table.runs) {
    if (r.failed) continue;
    for (std::size_t k = 0; k < r.end_to_end_rates.size(); ++k)
      os << to_string(r.algorithm) << ',' << r.point << ',' << r.trial << ',' << k << ',' << num(r.access_rates[k])
         << ',' << num(r.backhaul_rates[k]) << ',' << num(r.end_to_end_rates[k]) << '\n';
  }
}

void write_csi_csv(std::ostream& os, const std::vector<CsiComparisonRow>& rows) {
  os << kCsiCsvHeader << '\n';
  for (const auto& r : rows)
    os << to_string(r.algorithm) << ',' << point_columns(r.sweep) << ',' << r.trials << ',' << num(r.baseline_mean)
       << ',' << num(r.partial_mean) << ',' << (r.percentage ? num(*r.percentage) : std::string("nan")) << '\n';
}

void write_outputs(const std::string& dir, const ExperimentSpec& spec, const ResultTable& table,
                   const std::vector<CsiComparisonRow>* csi) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("results.csv");
    write_results_csv(f, table);
  }
  {
    auto f = open("timings.csv");
    write_timings_csv(f, table);
  }
  {
    auto f = open("rates.csv");
    write_run_rates_csv(f, table);
  }
  {
    auto f = open("summary.json");
    f << summary_json(spec, table, csi) << '\n';
  }
  if (csi) {
    auto f = open("csi_comparison.csv");
    write_csi_csv(f, *csi);
  }
  if (spec.write_traces)
    for (const auto& r : table.runs) {
      if (r.failed) continue;
      auto f = open("trace_" + r.id() + ".csv");
      write_trace_csv(f, r.trace);
    }
}

}  // namespace fdsb
