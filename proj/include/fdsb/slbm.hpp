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

// Successive lower-bound maximization: rebuild a bound tight at the current
// point, maximize it over X_c, repeat until the true objective stalls.

#include "fdsb/subsolver.hpp"
#include "fdsb/surrogates.hpp"

#include <chrono>
#include <optional>
#include <type_traits>

namespace fdsb {

struct SlbmConfig {
  int max_outer_iters = 30;
  double rel_tol = 1e-3;
  SurrogateFamily surrogate_family = SurrogateFamily::sinrc;

  void validate() const {
    require(max_outer_iters >= 1, "SlbmConfig: max_outer_iters must be >= 1");
    require(rel_tol >= 0.0, "SlbmConfig: rel_tol must be >= 0");
  }
};

struct TraceRow {
  int iteration;
  double objective;
  double surrogate;
  double elapsed_ms;
};

template <typename Real>
struct RunTrace {
  std::vector<TraceRow> rows;  // row 0 is the starting point
  BeamformerSet<Real> x;
  Clustering clustering;
  RateReport<Real> rates;      // exact rates at x under the channel the run optimized
  Real objective = Real(0);    // the run's own objective at x
  Real metric = Real(0);       // reported figure of merit (partial CSI: fresh-sample average)
  bool converged = false;
  int outer_iterations = 0;
  long inner_iterations = 0;
};

inline constexpr const char* kTraceCsvHeader = "iteration,objective,surrogate,elapsed_ms";

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << kTraceCsvHeader << '\n';
  for (const auto& r : rows) os << r.iteration << ',' << r.objective << ',' << r.surrogate << ',' << r.elapsed_ms << '\n';
}

/// Complex Gaussian draw with the zero pattern applied, scaled so that every
/// base station with at least one active block uses half of its budget.
template <typename Real>
BeamformerSet<Real> initial_point(const ChannelSet<Real>& ch, const Clustering& cl, const PowerBudgets<Real>& budgets,
                                  Rng& rng) {
  BeamformerSet<Real> x = BeamformerSet<Real>::zeros_like(ch);
  for (int k = 0; k < ch.n_users(); ++k) {
    x.w.col(k) = complex_normal<Real>(x.w.rows(), rng);
    x.v.col(k) = complex_normal<Real>(x.v.rows(), rng);
  }
  apply_zero_pattern(x, cl);
  for (int n = 0; n < x.n_sbs(); ++n) {
    const Real p = x.sbs_block(n).squaredNorm();
    if (p > Real(0)) x.sbs_block(n) *= std::sqrt(Real(0.5) * budgets.sbs(n) / p);
  }
  const Real pv = x.v.squaredNorm();
  if (pv > Real(0)) x.v *= std::sqrt(Real(0.5) * budgets.mbs / pv);
  return x;
}

/// Generic outer loop. `objective(x)` is the true objective; `bound_at(x)`
/// returns an evaluator tight at x (see solve_subproblem).
template <typename Real, typename Objective, typename BoundFactory>
RunTrace<Real> run_slbm(const Objective& objective, const BoundFactory& bound_at, BeamformerSet<Real> x,
                        const Clustering& cl, const PowerBudgets<Real>& budgets, const SlbmConfig& cfg,
                        const SubsolverConfig& sub_cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  RunTrace<Real> tr;
  tr.clustering = cl;
  Real f = objective(x);
  tr.rows.push_back({0, static_cast<double>(f), static_cast<double>(f), elapsed()});
  for (int t = 1; t <= cfg.max_outer_iters; ++t) {
    const auto bound = bound_at(x);
    const SubsolverResult<Real> res = solve_subproblem(bound, x, cl, budgets, sub_cfg);
    x = res.x;
    const Real f_new = objective(x);
    tr.inner_iterations += res.iterations;
    tr.outer_iterations = t;
    tr.rows.push_back({t, static_cast<double>(f_new), static_cast<double>(res.value), elapsed()});
    const bool stalled = f_new - f <= static_cast<Real>(cfg.rel_tol) * std::abs(f);
    f = f_new;
    if (stalled) {
      tr.converged = true;
      break;
    }
  }
  tr.x = std::move(x);
  tr.objective = f;
  return tr;
}

/// Full-CSI SLBM for problem P(c).
///
/// Without x0 the run starts from initial_point() seeded with `init_seed`.
/// A given x0 with zero objective while links are active (for instance x0 = 0,
/// where both surrogate families are flat) is replaced the same way.
template <typename Real>
RunTrace<Real> slbm(const ChannelSet<Real>& ch, const Clustering& cl, const DecodingOrder& ord,
                    const RVector<Real>& weights, const PowerBudgets<Real>& budgets, const SlbmConfig& cfg,
                    const SubsolverConfig& sub_cfg, std::type_identity_t<std::optional<BeamformerSet<Real>>> x0 = std::nullopt,
                    std::uint64_t init_seed = 0) {
  auto objective = [&](const BeamformerSet<Real>& x) { return weighted_sum_rate(x, ch, cl, ord, weights); };
  BeamformerSet<Real> x;
  if (x0 && !(cl.any() && objective(*x0) == Real(0))) {
    x = project_feasible(std::move(*x0), cl, budgets);
  } else {
    Rng rng(init_seed);
    x = initial_point(ch, cl, budgets, rng);
  }
  auto bound_at = [&](const BeamformerSet<Real>& xp) {
    return network_bound_at(cfg.surrogate_family, xp, ch, cl, ord, weights);
  };
  RunTrace<Real> tr = run_slbm(objective, bound_at, std::move(x), cl, budgets, cfg, sub_cfg);
  tr.rates = end_to_end_rates(tr.x, ch, cl, ord, weights);
  tr.metric = tr.objective;
  return tr;
}

}  // namespace fdsb
