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

// SBS clustering: static top-C selection from large-scale gains and the
// iterative link-removal heuristic.

#include "fdsb/slbm.hpp"

namespace fdsb {

struct ClusteringConfig {
  int j_delta = 1;  // links removed per round
};

/// Per user, the C SBSs with the largest large-scale gain (ties: lower index).
Clustering static_clustering(const LargeScale& ls, int cluster_size);

template <typename Real>
struct HeuristicResult {
  Clustering clustering;
  RunTrace<Real> trace;             // run of the selected clustering
  std::vector<Real> objectives;     // true objective of every candidate, round 0 first
  std::vector<Clustering> candidates;
};

/// Starts from full cooperation; after each SLBM solve deactivates the
/// j_delta active links with the smallest ||w_{k,n}||^2 (ties: lower (k, n))
/// and re-solves from the previous solution with those links zeroed. The
/// final, empty clustering is evaluated with objective 0. Returns the
/// candidate with the largest true objective (earliest on ties).
template <typename Real>
HeuristicResult<Real> heuristic_clustering(const ChannelSet<Real>& ch, const DecodingOrder& ord,
                                           const RVector<Real>& weights, const PowerBudgets<Real>& budgets,
                                           const SlbmConfig& slbm_cfg, const SubsolverConfig& sub_cfg,
                                           const ClusteringConfig& cl_cfg, std::uint64_t init_seed = 0) {
  const int K = ch.n_users();
  const int N = ch.n_sbs();
  require(cl_cfg.j_delta >= 1 && cl_cfg.j_delta <= K * N, "heuristic_clustering: j_delta must lie in [1, K N]");

  HeuristicResult<Real> out;
  Clustering cl = Clustering::full(K, N);
  std::optional<BeamformerSet<Real>> warm;
  std::optional<RunTrace<Real>> best;
  for (;;) {
    const DecodingOrder o = ord.rebind(cl);
    RunTrace<Real> tr = slbm(ch, cl, o, weights, budgets, slbm_cfg, sub_cfg, warm, init_seed);
    out.objectives.push_back(tr.objective);
    out.candidates.push_back(cl);
    if (!best || tr.objective > best->objective) best = tr;
    if (!cl.any()) break;

    struct Link {
      Real power;
      int k, n;
    };
    std::vector<Link> links;
    for (int k = 0; k < K; ++k)
      for (int n : cl.sbs_of_user(k)) links.push_back({tr.x.access(k, n).squaredNorm(), k, n});
    std::stable_sort(links.begin(), links.end(), [](const Link& a, const Link& b) { return a.power < b.power; });
    const auto removed = std::min<std::size_t>(links.size(), static_cast<std::size_t>(cl_cfg.j_delta));
    for (std::size_t i = 0; i < removed; ++i) cl.set(links[i].k, links[i].n, false);

    warm = tr.x;
    apply_zero_pattern(*warm, cl);
  }
  out.clustering = best->clustering;
  out.trace = std::move(*best);
  return out;
}

}  // namespace fdsb
