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

// JSON spec files and the JSON summary. Parsing is strict: unknown keys and
// wrongly typed values are errors, so a typo never silently falls back to a
// default.

#include "fdsb/harness.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace fdsb {

namespace {

using Json = nlohmann::ordered_json;

SurrogateFamily parse_family(const std::string& s) {
  if (s == "sinrc") return SurrogateFamily::sinrc;
  if (s == "wmmse") return SurrogateFamily::wmmse;
  throw InvalidArgument("unknown surrogate family '" + s + "'");
}

StepRule parse_step_rule(const std::string& s) {
  for (StepRule r : {StepRule::barrier, StepRule::backtracking, StepRule::diminishing})
    if (s == to_string(r)) return r;
  throw InvalidArgument("unknown step rule '" + s + "'");
}

StochInit parse_stoch_init(const std::string& s) {
  for (StochInit i : {StochInit::random, StochInit::deterministic_bound})
    if (s == to_string(i)) return i;
  throw InvalidArgument("unknown stochastic init '" + s + "'");
}

Json cluster_json(const ClusterChoice& c) {
  if (c.kind == ClusterChoice::Kind::fixed) return c.size;
  return c.label();
}

ClusterChoice parse_cluster(const Json& j, const std::string& where) {
  if (j.is_number_integer()) return ClusterChoice::fixed_size(j.get<int>());
  if (j.is_string()) {
    if (j == "full") return ClusterChoice::full_cooperation();
    if (j == "heuristic") return ClusterChoice::heuristic();
  }
  throw InvalidArgument(where + ": cluster must be \"full\", \"heuristic\" or an integer");
}

// Reads the listed keys of one object and rejects any other key.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw InvalidArgument(where_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw InvalidArgument(where_ + ": unknown key '" + key + "'");
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void operator()(const std::string& key, T& out) {
    const Json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, SurrogateFamily>)
        out = parse_family(v->get<std::string>());
      else if constexpr (std::is_same_v<T, StepRule>)
        out = parse_step_rule(v->get<std::string>());
      else if constexpr (std::is_same_v<T, StochInit>)
        out = parse_stoch_init(v->get<std::string>());
      else if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw InvalidArgument("expected a number");
        out = v->get<double>();
      } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
        if (!v->is_number_integer()) throw InvalidArgument("expected an integer");
        if constexpr (std::is_same_v<T, std::uint64_t>)
          if (!v->is_number_unsigned()) throw InvalidArgument("expected a non-negative integer");
        out = v->get<T>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw InvalidArgument("expected a boolean");
        out = v->get<bool>();
      } else {
        out = v->get<T>();
      }
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where_ + "." + key + ": " + e.what());
    } catch (const nlohmann::json::exception&) {
      throw InvalidArgument(where_ + "." + key + ": wrong type");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(Json& j) : j_(j) {}
  template <typename T>
  void operator()(const std::string& key, const T& v) {
    if constexpr (std::is_enum_v<T>)
      j_[key] = to_string(v);
    else
      j_[key] = v;
  }

 private:
  Json& j_;
};

// One field list per config, shared by reading and writing.

template <typename V, typename C>
void network_fields(V& v, C& c) {
  v("region_side_m", c.region_side_m);
  v("n_sbs", c.n_sbs);
  v("n_users_scheduled", c.n_users_scheduled);
  v("mbs_antennas", c.mbs_antennas);
  v("sbs_tx_antennas", c.sbs_tx_antennas);
  v("mbs_exclusion_m", c.mbs_exclusion_m);
  v("sbs_exclusion_m", c.sbs_exclusion_m);
  v("bandwidth_hz", c.bandwidth_hz);
  v("noise_psd_dbm_hz", c.noise_psd_dbm_hz);
  v("si_cancellation_db", c.si_cancellation_db);
  v("antenna_gain_mbs_dbi", c.antenna_gain_mbs_dbi);
  v("antenna_gain_sbs_dbi", c.antenna_gain_sbs_dbi);
  v("shadow_std_macro_db", c.shadow_std_macro_db);
  v("shadow_std_small_db", c.shadow_std_small_db);
  v("weights", c.weights);
}

template <typename V, typename C>
void slbm_fields(V& v, C& c) {
  v("max_outer_iters", c.max_outer_iters);
  v("rel_tol", c.rel_tol);
}

template <typename V, typename C>
void subsolver_fields(V& v, C& c) {
  v("max_inner_iters", c.max_inner_iters);
  v("tol_inner", c.tol_inner);
  v("step_rule", c.step_rule);
  v("backtrack_shrink", c.backtrack_shrink);
  v("best_iterate_tracking", c.best_iterate_tracking);
  v("step_a", c.step_a);
  v("step_b", c.step_b);
  v("smoothing_initial", c.smoothing_initial);
  v("smoothing_final", c.smoothing_final);
  v("barrier_growth", c.barrier_growth);
}

template <typename V, typename C>
void stochastic_fields(V& v, C& c) {
  v("max_iters", c.max_iters);
  v("init", c.init);
  v("gamma", c.gamma);
}

template <typename V, typename C>
void clustering_fields(V& v, C& c) {
  v("j_delta", c.j_delta);
}

template <typename C, typename Fields>
void read_block(Reader& top, const std::string& key, C& c, Fields fields) {
  if (const Json* j = top.find(key)) {
    Reader r(*j, key);
    fields(r, c);
  }
}

template <typename C, typename Fields>
Json write_block(const C& c, Fields fields) {
  Json j = Json::object();
  Writer w(j);
  fields(w, c);
  return j;
}

std::vector<SweepPoint> parse_sweep(const Json& j) {
  std::vector<SweepPoint> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string where = "sweep[" + std::to_string(i) + "]";
      Reader r(j[i], where);
      SweepPoint p;
      r("mbs_power_dbm", p.mbs_power_dbm);
      r("sbs_power_dbm", p.sbs_power_dbm);
      if (const Json* c = r.find("cluster")) p.cluster = parse_cluster(*c, where);
      out.push_back(p);
    }
    return out;
  }
  // Grid form: Cartesian product, MBS power outermost and cluster innermost.
  Reader r(j, "sweep");
  std::vector<double> mbs{SweepPoint{}.mbs_power_dbm}, sbs{SweepPoint{}.sbs_power_dbm};
  r("mbs_power_dbm", mbs);
  r("sbs_power_dbm", sbs);
  std::vector<ClusterChoice> clusters{ClusterChoice::full_cooperation()};
  if (const Json* c = r.find("cluster")) {
    if (!c->is_array()) throw InvalidArgument("sweep.cluster: expected an array");
    clusters.clear();
    for (const auto& e : *c) clusters.push_back(parse_cluster(e, "sweep.cluster"));
  }
  for (double pm : mbs)
    for (double ps : sbs)
      for (const auto& c : clusters) out.push_back({pm, ps, c});
  return out;
}

Json spec_to_json(const ExperimentSpec& s) {
  Json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["trials"] = s.trials;
  j["output_dir"] = s.output_dir;
  Json algs = Json::array();
  for (Algorithm a : s.algorithms) algs.push_back(to_string(a));
  j["algorithms"] = algs;
  Json sweep = Json::array();
  for (const auto& p : s.sweep)
    sweep.push_back({{"mbs_power_dbm", p.mbs_power_dbm}, {"sbs_power_dbm", p.sbs_power_dbm},
                     {"cluster", cluster_json(p.cluster)}});
  j["sweep"] = sweep;
  j["network"] = write_block(s.network, [](auto& v, auto& c) { network_fields(v, c); });
  j["slbm"] = write_block(s.slbm, [](auto& v, auto& c) { slbm_fields(v, c); });
  j["subsolver"] = write_block(s.subsolver, [](auto& v, auto& c) { subsolver_fields(v, c); });
  j["stochastic"] = write_block(s.stochastic, [](auto& v, auto& c) { stochastic_fields(v, c); });
  j["clustering"] = write_block(s.clustering, [](auto& v, auto& c) { clustering_fields(v, c); });
  j["saa_samples"] = s.saa_samples;
  j["eval_sample_count"] = s.eval_sample_count;
  j["write_traces"] = s.write_traces;
  j["compare_csi"] = s.compare_csi;
  return j;
}

Json point_json(const SweepPoint& p) {
  return {{"mbs_power_dbm", p.mbs_power_dbm}, {"sbs_power_dbm", p.sbs_power_dbm}, {"cluster", cluster_json(p.cluster)}};
}

}  // namespace

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("spec is not valid JSON: ") + e.what());
  }
  ExperimentSpec s;
  {
    Reader r(j, "spec");
    r.find("$comment");  // free-form, ignored
    r("name", s.name);
    r("seed", s.seed);
    r("trials", s.trials);
    r("output_dir", s.output_dir);
    std::vector<std::string> algs;
    r("algorithms", algs);
    for (const auto& a : algs) s.algorithms.push_back(parse_algorithm(a));
    if (const Json* sw = r.find("sweep")) s.sweep = parse_sweep(*sw);
    read_block(r, "network", s.network, [](auto& v, auto& c) { network_fields(v, c); });
    read_block(r, "slbm", s.slbm, [](auto& v, auto& c) { slbm_fields(v, c); });
    read_block(r, "subsolver", s.subsolver, [](auto& v, auto& c) { subsolver_fields(v, c); });
    read_block(r, "stochastic", s.stochastic, [](auto& v, auto& c) { stochastic_fields(v, c); });
    read_block(r, "clustering", s.clustering, [](auto& v, auto& c) { clustering_fields(v, c); });
    r("saa_samples", s.saa_samples);
    r("eval_sample_count", s.eval_sample_count);
    r("write_traces", s.write_traces);
    r("compare_csi", s.compare_csi);
  }
  s.validate();
  return s;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open spec file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_experiment_spec(ss.str());
}

std::string experiment_spec_json(const ExperimentSpec& spec) { return spec_to_json(spec).dump(2); }

std::string summary_json(const ExperimentSpec& spec, const ResultTable& table,
                         const std::vector<CsiComparisonRow>* csi) {
  Json j;
  j["spec"] = spec_to_json(spec);
  // Where the files went is not part of the experiment; dropping it keeps
  // summaries from equal runs in different directories identical.
  j["spec"].erase("output_dir");
  j["failed_cells"] = table.failed_cells();
  j["failed_overall"] = table.failed_overall();

  Json rows = Json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"algorithm", to_string(r.algorithm)},
                    {"point", point_json(r.sweep)},
                    {"runs", r.runs},
                    {"failed", r.failed},
                    {"mean_sum_rate", r.mean_sum_rate},
                    {"std_error", r.std_error},
                    {"mean_iterations", r.mean_iterations}});
  j["results"] = rows;

  Json runs = Json::array();
  for (const auto& r : table.runs) {
    Json run{{"id", r.id()},
             {"algorithm", to_string(r.algorithm)},
             {"point", r.point},
             {"trial", r.trial},
             {"trial_seed", r.trial_seed},
             {"failed", r.failed}};
    if (r.failed) {
      run["error"] = r.error;
    } else {
      Json bitmap = Json::array();
      for (int k = 0; k < r.clustering.n_users(); ++k) {
        Json row = Json::array();
        for (int n = 0; n < r.clustering.n_sbs(); ++n) row.push_back(r.clustering.serves(k, n) ? 1 : 0);
        bitmap.push_back(row);
      }
      run["objective"] = r.objective;
      run["metric"] = r.metric;
      run["converged"] = r.converged;
      run["outer_iterations"] = r.outer_iterations;
      run["inner_iterations"] = r.inner_iterations;
      run["clustering"] = bitmap;
      run["access_rates"] = r.access_rates;
      run["backhaul_rates"] = r.backhaul_rates;
      run["end_to_end_rates"] = r.end_to_end_rates;
    }
    runs.push_back(run);
  }
  j["runs"] = runs;

  if (csi) {
    Json c = Json::array();
    for (const auto& r : *csi) {
      Json row{{"algorithm", to_string(r.algorithm)},
               {"point", point_json(r.sweep)},
               {"trials", r.trials},
               {"baseline_mean", r.baseline_mean},
               {"partial_mean", r.partial_mean}};
      row["percentage"] = r.percentage ? Json(*r.percentage) : Json(nullptr);
      c.push_back(row);
    }
    j["csi_comparison"] = c;
  }
  return j.dump(2);
}

}  // namespace fdsb
