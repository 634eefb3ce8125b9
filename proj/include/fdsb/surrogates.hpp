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

// Expansion-point auxiliaries and the surrogate objectives built from them.

#include "fdsb/surrogates/bounds.hpp"

namespace fdsb {

/// Full-CSI surrogate: one access realization (the true channel) per user.
template <typename Real>
using NetworkBound = CompositeBound<Real, SampledAccessBound<Real>>;

template <typename Real>
using JensenBound = CompositeBound<Real, JensenAccessBound<Real>>;

// ---------------------------------------------------------------------------
// Auxiliary containers

template <typename Real>
struct SinrcAux {
  CVector<Real> u_access;    // K, zero for inactive users
  CMatrix<Real> u_backhaul;  // K x N, zero where c[k][n] = 0
};

template <typename Real>
struct WmmseAux {
  CVector<Real> alpha;           // K
  RVector<Real> rho;             // K
  CMatrix<Real> alpha_backhaul;  // K x N
  RMatrix<Real> rho_backhaul;    // K x N, one where c[k][n] = 0
};

/// History of strongly concave access bounds, one entry per iteration.
template <typename Real>
struct StochAux {
  SurrogateFamily family = SurrogateFamily::sinrc;
  Real gamma = Real(0);
  std::vector<AccessSamples<Real>> users;  // per user: Omega^i, receiver and w~ of every stored iteration

  int size() const { return users.empty() ? 0 : static_cast<int>(users.front().size()); }
};

// ---------------------------------------------------------------------------
// Construction from expansion points

namespace detail {

template <typename Real>
std::vector<AccessSamples<Real>> single_realization(const ChannelSet<Real>& ch, const std::vector<LinkAux<Real>>& aux) {
  std::vector<AccessSamples<Real>> users;
  for (int k = 0; k < ch.n_users(); ++k) {
    AccessSamples<Real> s;
    s.append(ch.user_sbs.col(k), aux[static_cast<std::size_t>(k)], nullptr);
    users.push_back(std::move(s));
  }
  return users;
}

template <typename Real>
std::vector<LinkAux<Real>> access_aux_at(SurrogateFamily family, const BeamformerSet<Real>& x, const ChannelSet<Real>& ch,
                                         const Clustering& cl) {
  std::vector<LinkAux<Real>> aux;
  for (int k = 0; k < ch.n_users(); ++k) {
    if (!cl.user_active(k)) {
      aux.push_back(optimal_link_aux(family, Complex<Real>(0), ch.noise_user(k)));
      continue;
    }
    aux.push_back(optimal_link_aux(family, access_signal(k, x, ch, cl),
                                   interference_access(k, x, ch, cl) + ch.noise_user(k)));
  }
  return aux;
}

}  // namespace detail

/// Receivers u = signal / (interference + noise) on both hops.
template <typename Real>
SinrcAux<Real> mmse_aux_sinrc(const BeamformerSet<Real>& x, const ChannelSet<Real>& ch, const Clustering& cl,
                              const DecodingOrder& ord) {
  const auto acc = detail::access_aux_at(SurrogateFamily::sinrc, x, ch, cl);
  const auto bh = BackhaulBound<Real>::at(x, ch, cl, ord, SurrogateFamily::sinrc);
  SinrcAux<Real> aux{CVector<Real>::Zero(ch.n_users()), CMatrix<Real>::Zero(ch.n_users(), ch.n_sbs())};
  for (int k = 0; k < ch.n_users(); ++k) {
    if (!cl.user_active(k)) continue;
    aux.u_access(k) = acc[static_cast<std::size_t>(k)].receiver;
    for (int n : cl.sbs_of_user(k)) aux.u_backhaul(k, n) = bh.aux(k, n).receiver;
  }
  return aux;
}

/// MMSE receivers and inverse-MSE weights on both hops.
template <typename Real>
WmmseAux<Real> wmmse_aux(const BeamformerSet<Real>& x, const ChannelSet<Real>& ch, const Clustering& cl,
                         const DecodingOrder& ord) {
  const int K = ch.n_users();
  const int N = ch.n_sbs();
  const auto acc = detail::access_aux_at(SurrogateFamily::wmmse, x, ch, cl);
  const auto bh = BackhaulBound<Real>::at(x, ch, cl, ord, SurrogateFamily::wmmse);
  WmmseAux<Real> aux{CVector<Real>::Zero(K), RVector<Real>::Ones(K), CMatrix<Real>::Zero(K, N),
                     RMatrix<Real>::Ones(K, N)};
  for (int k = 0; k < K; ++k) {
    if (!cl.user_active(k)) continue;
    aux.alpha(k) = acc[static_cast<std::size_t>(k)].receiver;
    aux.rho(k) = acc[static_cast<std::size_t>(k)].weight;
    for (int n : cl.sbs_of_user(k)) {
      aux.alpha_backhaul(k, n) = bh.aux(k, n).receiver;
      aux.rho_backhaul(k, n) = bh.aux(k, n).weight;
    }
  }
  return aux;
}

template <typename Real>
NetworkBound<Real> network_bound(const SinrcAux<Real>& aux, const ChannelSet<Real>& ch, const Clustering& cl,
                                 const DecodingOrder& ord, const RVector<Real>& weights) {
  const int K = ch.n_users();
  const int N = ch.n_sbs();
  std::vector<LinkAux<Real>> acc, bh(static_cast<std::size_t>(K * N));
  for (int k = 0; k < K; ++k) {
    acc.push_back({aux.u_access(k), Real(1)});
    for (int n = 0; n < N; ++n) bh[static_cast<std::size_t>(k * N + n)] = {aux.u_backhaul(k, n), Real(1)};
  }
  return NetworkBound<Real>(ch, cl, weights,
                            SampledAccessBound<Real>(ch, cl, SurrogateFamily::sinrc, detail::single_realization(ch, acc)),
                            BackhaulBound<Real>(ch, cl, ord, SurrogateFamily::sinrc, std::move(bh)));
}

template <typename Real>
NetworkBound<Real> network_bound(const WmmseAux<Real>& aux, const ChannelSet<Real>& ch, const Clustering& cl,
                                 const DecodingOrder& ord, const RVector<Real>& weights) {
  const int K = ch.n_users();
  const int N = ch.n_sbs();
  std::vector<LinkAux<Real>> acc, bh(static_cast<std::size_t>(K * N));
  for (int k = 0; k < K; ++k) {
    acc.push_back({aux.alpha(k), aux.rho(k)});
    for (int n = 0; n < N; ++n) bh[static_cast<std::size_t>(k * N + n)] = {aux.alpha_backhaul(k, n), aux.rho_backhaul(k, n)};
  }
  return NetworkBound<Real>(ch, cl, weights,
                            SampledAccessBound<Real>(ch, cl, SurrogateFamily::wmmse, detail::single_realization(ch, acc)),
                            BackhaulBound<Real>(ch, cl, ord, SurrogateFamily::wmmse, std::move(bh)));
}

/// Surrogate of the requested family that is tight at x_prime.
template <typename Real>
NetworkBound<Real> network_bound_at(SurrogateFamily family, const BeamformerSet<Real>& x_prime, const ChannelSet<Real>& ch,
                                    const Clustering& cl, const DecodingOrder& ord, const RVector<Real>& weights) {
  return NetworkBound<Real>(
      ch, cl, weights,
      SampledAccessBound<Real>(ch, cl, family, detail::single_realization(ch, detail::access_aux_at(family, x_prime, ch, cl))),
      BackhaulBound<Real>::at(x_prime, ch, cl, ord, family));
}

// ---------------------------------------------------------------------------
// Per-term evaluation

template <typename Real>
Real sinrc_bound_access(const BeamformerSet<Real>& x, const SinrcAux<Real>& aux, const ChannelSet<Real>& ch,
                        const Clustering& cl, int k) {
  if (!cl.user_active(k)) return Real(0);
  return link_term(SurrogateFamily::sinrc, access_signal(k, x, ch, cl),
                   interference_access(k, x, ch, cl) + ch.noise_user(k), LinkAux<Real>{aux.u_access(k), Real(1)})
      .value;
}

template <typename Real>
Real sinrc_bound_backhaul(const BeamformerSet<Real>& x, const SinrcAux<Real>& aux, const ChannelSet<Real>& ch,
                          const Clustering& cl, const DecodingOrder& ord, int k, int n) {
  const Complex<Real> z = ch.sbs_mbs.col(n).dot(x.v.col(k));
  const Real g = interference_backhaul(k, n, x, ch, cl, ord) + ch.noise_sbs(n);
  return link_term(SurrogateFamily::sinrc, z, g, LinkAux<Real>{aux.u_backhaul(k, n), Real(1)}).value;
}

/// Composite SINRC bound with the active-term subgradient.
template <typename Real>
BoundEvaluation<Real> composite_bound(const BeamformerSet<Real>& x, const SinrcAux<Real>& aux, const ChannelSet<Real>& ch,
                                      const Clustering& cl, const DecodingOrder& ord, const RVector<Real>& weights) {
  return network_bound(aux, ch, cl, ord, weights)(x, Real(0), true);
}

template <typename Real>
BoundEvaluation<Real> wmmse_bound(const BeamformerSet<Real>& x, const WmmseAux<Real>& aux, const ChannelSet<Real>& ch,
                                  const Clustering& cl, const DecodingOrder& ord, const RVector<Real>& weights) {
  return network_bound(aux, ch, cl, ord, weights)(x, Real(0), true);
}

// ---------------------------------------------------------------------------
// Stochastic (partial CSI) surrogates

template <typename Real>
StochAux<Real> make_stoch_aux(SurrogateFamily family, Real gamma, int n_users) {
  require(gamma > Real(0), "make_stoch_aux: gamma must be positive");
  return {family, gamma, std::vector<AccessSamples<Real>>(static_cast<std::size_t>(n_users))};
}

/// Appends the bound tight at x_prev under the completed realization
/// `omega` (NL x K access channels with the unknown blocks drawn).
template <typename Real>
void stoch_aux_update(StochAux<Real>& aux, const BeamformerSet<Real>& x_prev, const CMatrix<Real>& omega,
                      const ChannelSet<Real>& ch_known, const Clustering& cl) {
  for (int k = 0; k < ch_known.n_users(); ++k) {
    const CVector<Real> channel = omega.col(k);
    const Complex<Real> z = access_signal(k, x_prev, ch_known, cl);
    const Real g = sampled_access_interference(k, x_prev, ch_known, CMatrix<Real>(channel))(0);
    const CVector<Real> anchor = x_prev.w.col(k);
    aux.users[static_cast<std::size_t>(k)].append(channel, optimal_link_aux(aux.family, z, g), &anchor);
  }
}

template <typename Real>
NetworkBound<Real> stoch_network_bound(const StochAux<Real>& history, BackhaulBound<Real> backhaul,
                                       const ChannelSet<Real>& ch_known, const Clustering& cl, const RVector<Real>& weights) {
  require(history.size() >= 1, "stoch_network_bound: empty history");
  return NetworkBound<Real>(ch_known, cl, weights,
                            SampledAccessBound<Real>(ch_known, cl, history.family, history.users, history.gamma),
                            std::move(backhaul));
}

/// Running-average access bound composed with the plain backhaul bound.
template <typename Real>
BoundEvaluation<Real> stoch_composite_bound(const BeamformerSet<Real>& x, const StochAux<Real>& history,
                                            const SinrcAux<Real>& aux_backhaul, const ChannelSet<Real>& ch_known,
                                            const Clustering& cl, const DecodingOrder& ord, const RVector<Real>& weights) {
  const int K = ch_known.n_users();
  const int N = ch_known.n_sbs();
  std::vector<LinkAux<Real>> bh(static_cast<std::size_t>(K * N));
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) bh[static_cast<std::size_t>(k * N + n)] = {aux_backhaul.u_backhaul(k, n), Real(1)};
  return stoch_network_bound(history, BackhaulBound<Real>(ch_known, cl, ord, SurrogateFamily::sinrc, std::move(bh)),
                             ch_known, cl, weights)(x, Real(0), true);
}

// ---------------------------------------------------------------------------
// Jensen deterministic surrogate

template <typename Real>
JensenBound<Real> jensen_bound_at(SurrogateFamily family, const BeamformerSet<Real>& x_prime, const JensenMatrix<Real>& jm,
                                  const ChannelSet<Real>& ch_known, const Clustering& cl, const DecodingOrder& ord,
                                  const RVector<Real>& weights) {
  return JensenBound<Real>(ch_known, cl, weights, JensenAccessBound<Real>::at(x_prime, ch_known, cl, jm, family),
                           BackhaulBound<Real>::at(x_prime, ch_known, cl, ord, family));
}

/// sum_k w_k min(jensen_rate_k, R^B_k): the deterministic objective.
template <typename Real>
Real jensen_objective(const BeamformerSet<Real>& x, const JensenMatrix<Real>& jm, const ChannelSet<Real>& ch_known,
                      const Clustering& cl, const DecodingOrder& ord, const RVector<Real>& weights) {
  const RateReport<Real> r = end_to_end_rates(x, ch_known, cl, ord, weights);
  Real f(0);
  for (int k = 0; k < ch_known.n_users(); ++k)
    if (cl.user_active(k)) f += weights(k) * std::min(jensen_rate(k, x, jm, ch_known, cl), r.backhaul(k));
  return f;
}

}  // namespace fdsb
