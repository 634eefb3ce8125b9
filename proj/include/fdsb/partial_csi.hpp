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

// Beamforming when the access channels from non-serving SBSs are known only
// through their large-scale gains. The objective is
//   sum_k w_k min(E[R^A_k], R^B_k)
// with the expectation over the unknown blocks.

#include "fdsb/slbm.hpp"

namespace fdsb {

/// Copy of `ch` that hides every access block (k, n) with c[k][n] = 0.
template <typename Real>
ChannelSet<Real> partial_csi_view(const ChannelSet<Real>& ch, const Clustering& cl) {
  ChannelSet<Real> out = ch;
  out.csi_known = BoolMatrix::Constant(ch.n_users(), ch.n_sbs(), false);
  for (int k = 0; k < ch.n_users(); ++k)
    for (int n = 0; n < ch.n_sbs(); ++n) {
      out.csi_known(k, n) = cl.serves(k, n);
      if (!cl.serves(k, n)) out.user_sbs_block(k, n).setZero();
    }
  return out;
}

/// SIC order from aggregate gains with the unknown blocks replaced by their
/// expected power L beta.
template <typename Real>
DecodingOrder partial_decoding_order(const ChannelSet<Real>& ch_known, const Clustering& cl) {
  std::vector<double> gain(static_cast<std::size_t>(ch_known.n_users()), 0.0);
  for (int k = 0; k < ch_known.n_users(); ++k)
    for (int n = 0; n < ch_known.n_sbs(); ++n)
      gain[static_cast<std::size_t>(k)] +=
          ch_known.csi_known(k, n) ? static_cast<double>(ch_known.user_sbs_block(k, n).squaredNorm())
                                   : static_cast<double>(ch_known.sbs_antennas) * ch_known.large_scale.user_sbs(k, n);
  return DecodingOrder(std::move(gain), cl);
}

/// Per user, S completions of the stacked access channel (NL x S each).
template <typename Real>
struct AccessEnsemble {
  std::vector<CMatrix<Real>> users;

  Index size() const { return users.empty() ? 0 : users.front().cols(); }
};

/// One completion of every user's access channel: known blocks copied, the
/// rest drawn as sqrt(beta) CN(0, I). Returns NL x K.
template <typename Real>
CMatrix<Real> sample_completion(const ChannelSet<Real>& ch_known, Rng& rng) {
  CMatrix<Real> h = ch_known.user_sbs;
  const Index L = ch_known.sbs_antennas;
  for (int k = 0; k < ch_known.n_users(); ++k)
    for (int n = 0; n < ch_known.n_sbs(); ++n)
      if (!ch_known.csi_known(k, n))
        h.col(k).segment(n * L, L) =
            complex_normal<Real>(L, rng) * static_cast<Real>(std::sqrt(ch_known.large_scale.user_sbs(k, n)));
  return h;
}

template <typename Real>
AccessEnsemble<Real> draw_ensemble(const ChannelSet<Real>& ch_known, int count, Rng& rng) {
  require(count >= 1, "draw_ensemble: count must be >= 1");
  AccessEnsemble<Real> e;
  e.users.assign(static_cast<std::size_t>(ch_known.n_users()), CMatrix<Real>(ch_known.user_sbs.rows(), count));
  for (int s = 0; s < count; ++s) {
    const CMatrix<Real> h = sample_completion(ch_known, rng);
    for (int k = 0; k < ch_known.n_users(); ++k) e.users[static_cast<std::size_t>(k)].col(s) = h.col(k);
  }
  return e;
}

/// Rates with R^A_k replaced by its ensemble average.
template <typename Real>
RateReport<Real> partial_csi_rates(const BeamformerSet<Real>& x, const ChannelSet<Real>& ch_known, const Clustering& cl,
                                   const DecodingOrder& ord, const RVector<Real>& weights,
                                   const AccessEnsemble<Real>& ensemble) {
  RateReport<Real> r = end_to_end_rates(x, ch_known, cl, ord, weights);
  for (int k = 0; k < ch_known.n_users(); ++k) {
    if (!cl.user_active(k)) continue;
    r.access(k) = sampled_access_rates(k, x, ch_known, cl, ensemble.users[static_cast<std::size_t>(k)]).mean();
    r.end_to_end(k) = std::min(r.access(k), r.backhaul(k));
  }
  r.weighted_sum = weights.dot(r.end_to_end);
  return r;
}

template <typename Real>
Real partial_csi_objective(const BeamformerSet<Real>& x, const ChannelSet<Real>& ch_known, const Clustering& cl,
                           const DecodingOrder& ord, const RVector<Real>& weights, const AccessEnsemble<Real>& ensemble) {
  return partial_csi_rates(x, ch_known, cl, ord, weights, ensemble).weighted_sum;
}

// ---------------------------------------------------------------------------

/// SLBM on the deterministic problem whose access rate is the Jensen bound.
/// `metric` and `rates` use `eval_sample_count` fresh completions.
template <typename Real>
RunTrace<Real> dlb_slbm(const ChannelSet<Real>& ch_known, const Clustering& cl, const DecodingOrder& ord,
                        const RVector<Real>& weights, const PowerBudgets<Real>& budgets, const SlbmConfig& cfg,
                        const SubsolverConfig& sub_cfg, int eval_sample_count, std::uint64_t seed) {
  const JensenMatrix<Real> jm = jensen_matrix(ch_known, ch_known.large_scale, cl);
  Rng init_rng(derive_seed(seed, 0, 0));
  Rng eval_rng(derive_seed(seed, 2, 0));
  auto objective = [&](const BeamformerSet<Real>& x) { return jensen_objective(x, jm, ch_known, cl, ord, weights); };
  auto bound_at = [&](const BeamformerSet<Real>& xp) {
    return jensen_bound_at(cfg.surrogate_family, xp, jm, ch_known, cl, ord, weights);
  };
  RunTrace<Real> tr = run_slbm(objective, bound_at, initial_point(ch_known, cl, budgets, init_rng), cl, budgets, cfg, sub_cfg);
  const AccessEnsemble<Real> eval_set = draw_ensemble(ch_known, eval_sample_count, eval_rng);
  tr.rates = partial_csi_rates(tr.x, ch_known, cl, ord, weights, eval_set);
  tr.metric = tr.rates.weighted_sum;
  return tr;
}

// ---------------------------------------------------------------------------

/// Starting point of the stochastic method: a random feasible point, or the
/// solution of the deterministic Jensen-bound problem with the same family.
enum class StochInit { random, deterministic_bound };

inline const char* to_string(StochInit i) { return i == StochInit::random ? "random" : "deterministic_bound"; }

struct StochConfig {
  int max_iters = 300;
  StochInit init = StochInit::deterministic_bound;
  double gamma = 0.0;  // prox weight; 0 selects 1e-3 / P^S
  int eval_sample_count = 200;
  SurrogateFamily surrogate_family = SurrogateFamily::sinrc;

  void validate() const {
    require(max_iters >= 1, "StochConfig: max_iters must be >= 1");
    require(gamma >= 0.0, "StochConfig: gamma must be >= 0");
    require(eval_sample_count >= 1, "StochConfig: eval_sample_count must be >= 1");
  }
};

/// Resets stored receivers whose bound left its domain at x to the receiver
/// tight at x under the same realization. Any receiver gives a valid lower
/// bound, so the average stays a lower bound of the sample-average rate.
template <typename Real>
int repair_history(StochAux<Real>& aux, const BeamformerSet<Real>& x, const ChannelSet<Real>& ch_known,
                   const Clustering& cl) {
  int repaired = 0;
  for (int k = 0; k < ch_known.n_users(); ++k) {
    if (!cl.user_active(k)) continue;
    auto& smp = aux.users[static_cast<std::size_t>(k)];
    const Complex<Real> z = access_signal(k, x, ch_known, cl);
    const RVector<Real> g = sampled_access_interference(k, x, ch_known, smp.channels);
    for (Index s = 0; s < smp.size(); ++s) {
      if (link_term(aux.family, z, g(s), LinkAux<Real>{smp.receiver(s), smp.weight(s)}).value > kNegInf<Real>) continue;
      const LinkAux<Real> a = optimal_link_aux(aux.family, z, g(s));
      smp.receiver(s) = a.receiver;
      smp.weight(s) = a.weight;
      ++repaired;
    }
  }
  return repaired;
}

/// Stochastic SLBM: each iteration draws a completion Omega^t, appends the
/// strongly concave access bound tight at x^{t-1}, and maximizes the running
/// average composed with the backhaul bound at x^{t-1}. Trace objective and
/// metric are the partial-CSI objective over `eval_sample_count` draws fixed
/// per run.
///
/// Bounds built at poor early iterates keep weight 1/t in the running average,
/// so from a random start the iterates move with an effective step of order
/// 1/t and can stall well below a stationary point. The default start is
/// therefore the deterministic-bound solution (StochInit).
template <typename Real>
RunTrace<Real> stochastic_slbm(const ChannelSet<Real>& ch_known, const Clustering& cl, const DecodingOrder& ord,
                               const RVector<Real>& weights, const PowerBudgets<Real>& budgets, const StochConfig& cfg,
                               const SubsolverConfig& sub_cfg, std::uint64_t seed) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  Rng init_rng(derive_seed(seed, 0, 0));
  Rng omega_rng(derive_seed(seed, 1, 0));
  Rng eval_rng(derive_seed(seed, 2, 0));
  const AccessEnsemble<Real> eval_set = draw_ensemble(ch_known, cfg.eval_sample_count, eval_rng);
  auto objective = [&](const BeamformerSet<Real>& x) {
    return partial_csi_objective(x, ch_known, cl, ord, weights, eval_set);
  };

  const Real gamma = cfg.gamma > 0.0 ? static_cast<Real>(cfg.gamma) : Real(1e-3) / budgets.sbs.maxCoeff();
  StochAux<Real> aux = make_stoch_aux(cfg.surrogate_family, gamma, ch_known.n_users());
  BeamformerSet<Real> x;
  if (cfg.init == StochInit::random) {
    x = initial_point(ch_known, cl, budgets, init_rng);
  } else {
    SlbmConfig det;
    det.surrogate_family = cfg.surrogate_family;
    x = dlb_slbm(ch_known, cl, ord, weights, budgets, det, sub_cfg, 1, seed).x;
  }

  RunTrace<Real> tr;
  tr.clustering = cl;
  Real f = objective(x);
  tr.rows.push_back({0, static_cast<double>(f), static_cast<double>(f), elapsed()});
  for (int t = 1; t <= cfg.max_iters; ++t) {
    stoch_aux_update(aux, x, sample_completion(ch_known, omega_rng), ch_known, cl);
    repair_history(aux, x, ch_known, cl);
    const auto bound = stoch_network_bound(aux, BackhaulBound<Real>::at(x, ch_known, cl, ord, cfg.surrogate_family),
                                           ch_known, cl, weights);
    const SubsolverResult<Real> res = solve_subproblem(bound, x, cl, budgets, sub_cfg);
    x = res.x;
    f = objective(x);
    tr.inner_iterations += res.iterations;
    tr.outer_iterations = t;
    tr.rows.push_back({t, static_cast<double>(f), static_cast<double>(res.value), elapsed()});
  }
  tr.x = std::move(x);
  tr.objective = f;
  tr.metric = f;
  tr.rates = partial_csi_rates(tr.x, ch_known, cl, ord, weights, eval_set);
  return tr;
}

/// SLBM on the sample-average problem over `n_samples` completions fixed for
/// the run; the backhaul bound is shared by all samples.
template <typename Real>
RunTrace<Real> saa_slbm(const ChannelSet<Real>& ch_known, const Clustering& cl, const DecodingOrder& ord,
                        const RVector<Real>& weights, const PowerBudgets<Real>& budgets, int n_samples,
                        const SlbmConfig& cfg, const SubsolverConfig& sub_cfg, int eval_sample_count,
                        std::uint64_t seed) {
  require(n_samples >= 1, "saa_slbm: n_samples must be >= 1");
  Rng init_rng(derive_seed(seed, 0, 0));
  Rng eval_rng(derive_seed(seed, 2, 0));
  Rng saa_rng(derive_seed(seed, 3, 0));
  const AccessEnsemble<Real> saa_set = draw_ensemble(ch_known, n_samples, saa_rng);
  auto objective = [&](const BeamformerSet<Real>& x) {
    return partial_csi_objective(x, ch_known, cl, ord, weights, saa_set);
  };
  auto bound_at = [&](const BeamformerSet<Real>& xp) {
    std::vector<AccessSamples<Real>> users;
    for (int k = 0; k < ch_known.n_users(); ++k)
      users.push_back(build_access_samples(k, cfg.surrogate_family, xp, ch_known, cl,
                                           saa_set.users[static_cast<std::size_t>(k)]));
    return NetworkBound<Real>(ch_known, cl, weights,
                              SampledAccessBound<Real>(ch_known, cl, cfg.surrogate_family, std::move(users)),
                              BackhaulBound<Real>::at(xp, ch_known, cl, ord, cfg.surrogate_family));
  };
  RunTrace<Real> tr = run_slbm(objective, bound_at, initial_point(ch_known, cl, budgets, init_rng), cl, budgets, cfg, sub_cfg);
  const AccessEnsemble<Real> eval_set = draw_ensemble(ch_known, eval_sample_count, eval_rng);
  tr.rates = partial_csi_rates(tr.x, ch_known, cl, ord, weights, eval_set);
  tr.metric = tr.rates.weighted_sum;
  return tr;
}

}  // namespace fdsb
