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

// Access-link lower bounds.
//
// SampledAccessBound averages per-realization link bounds over a set of
// access channel realizations of each user. One realization equal to the
// true channel gives the full-CSI surrogate; a growing history with a prox
// anchor gives the stochastic (strongly concave) surrogate; a fixed sample
// set gives the sample-average surrogate.
//
// JensenAccessBound replaces the interference by its expectation over the
// unknown links, written as the quadratic form w_i^H A_k w_i.

#include "fdsb/rate_model.hpp"
#include "fdsb/surrogates/curvature.hpp"
#include "fdsb/surrogates/link.hpp"

#include <vector>

namespace fdsb {

/// Realizations of one user's stacked access channel with the link aux built
/// for each, plus optional prox anchors.
template <typename Real>
struct AccessSamples {
  CMatrix<Real> channels;  // NL x S, column s is a realization of h_{u_k}
  CVector<Real> receiver;  // S
  RVector<Real> weight;    // S, rho for WMMSE (ones for SINRC)
  CMatrix<Real> anchors;   // NL x S prox anchors w~; empty when unused

  Index size() const { return channels.cols(); }

  void append(const CVector<Real>& channel, const LinkAux<Real>& aux, const CVector<Real>* anchor) {
    const Index s = size();
    channels.conservativeResize(channel.size(), s + 1);
    channels.col(s) = channel;
    receiver.conservativeResize(s + 1);
    receiver(s) = aux.receiver;
    weight.conservativeResize(s + 1);
    weight(s) = aux.weight;
    if (anchor) {
      anchors.conservativeResize(anchor->size(), s + 1);
      anchors.col(s) = *anchor;
    }
  }
};

/// Interference-plus-noise of user k under each column of `channels`
/// (NL x S); the MBS cross-link term is realization independent.
template <typename Real>
RVector<Real> sampled_access_interference(int k, const BeamformerSet<Real>& x, const ChannelSet<Real>& ch,
                                          const CMatrix<Real>& channels, CMatrix<Real>* projections = nullptr) {
  CMatrix<Real> p = channels.adjoint() * x.w;  // S x K
  RVector<Real> g = p.cwiseAbs2().rowwise().sum() - p.col(k).cwiseAbs2();
  g.array() += (x.v.adjoint() * ch.user_mbs.col(k)).squaredNorm() + ch.noise_user(k);
  if (projections) *projections = std::move(p);
  return g;
}

/// R^A_k(x; Omega_s) for every realization s.
template <typename Real>
RVector<Real> sampled_access_rates(int k, const BeamformerSet<Real>& x, const ChannelSet<Real>& ch,
                                   const Clustering& cl, const CMatrix<Real>& channels) {
  if (!cl.user_active(k)) return RVector<Real>::Zero(channels.cols());
  const Real signal = abs2(access_signal(k, x, ch, cl));
  const RVector<Real> g = sampled_access_interference(k, x, ch, channels);
  return (Real(1) + signal / g.array()).log() / kLn2<Real>;
}

template <typename Real>
class SampledAccessBound {
 public:
  SampledAccessBound(const ChannelSet<Real>& ch, const Clustering& cl, SurrogateFamily family,
                     std::vector<AccessSamples<Real>> users, Real prox_weight = Real(0))
      : ch_(&ch), cl_(&cl), family_(family), users_(std::move(users)), prox_(prox_weight) {}

  SurrogateFamily family() const { return family_; }
  const std::vector<AccessSamples<Real>>& users() const { return users_; }

  Real value(int k, const BeamformerSet<Real>& x) const {
    const auto& smp = users_[static_cast<std::size_t>(k)];
    const Complex<Real> z = access_signal(k, x, *ch_, *cl_);
    const RVector<Real> g = sampled_access_interference(k, x, *ch_, smp.channels);
    Real total(0);
    for (Index s = 0; s < smp.size(); ++s) {
      const Real v = link_term(family_, z, g(s), aux(smp, s)).value;
      if (v == kNegInf<Real>) return kNegInf<Real>;
      total += v;
    }
    return total / static_cast<Real>(smp.size()) - prox_penalty(k, x);
  }

  void add_gradient(int k, const BeamformerSet<Real>& x, Real scale, BeamformerSet<Real>& grad) const {
    const auto& smp = users_[static_cast<std::size_t>(k)];
    const Real inv_s = Real(1) / static_cast<Real>(smp.size());
    const Complex<Real> z = access_signal(k, x, *ch_, *cl_);
    CMatrix<Real> p;
    const RVector<Real> g = sampled_access_interference(k, x, *ch_, smp.channels, &p);

    Complex<Real> signal_coef(0);
    RVector<Real> interference_coef(smp.size());
    for (Index s = 0; s < smp.size(); ++s) {
      const LinkTerm<Real> t = link_term(family_, z, g(s), aux(smp, s));
      signal_coef += t.signal_coef;
      interference_coef(s) = t.interference_coef;
    }
    signal_coef *= scale * inv_s;
    interference_coef *= scale * inv_s;

    grad.w.col(k) += ch_->user_sbs.col(k) * signal_coef;
    // co-link: d/dw_j sum_s b_s |c_s^H w_j|^2 = 2 sum_s b_s c_s (c_s^H w_j)
    for (int j = 0; j < x.n_users(); ++j) {
      if (j == k) continue;
      grad.w.col(j) += Real(2) * smp.channels * (interference_coef.array() * p.col(j).array()).matrix();
    }
    const auto gk = ch_->user_mbs.col(k);
    grad.v += (Real(2) * interference_coef.sum()) * gk * (gk.adjoint() * x.v);
    if (prox_ > Real(0) && smp.anchors.size() > 0) {
      const CVector<Real> mean_anchor = smp.anchors.rowwise().mean();
      grad.w.col(k) -= (scale * prox_) * (x.w.col(k) - mean_anchor);
    }
  }

  void add_curvature(int k, const BeamformerSet<Real>& x, Real scale, Curvature<Real>& hess) const {
    const auto& smp = users_[static_cast<std::size_t>(k)];
    const Real c = scale / static_cast<Real>(smp.size());
    const Complex<Real> z = access_signal(k, x, *ch_, *cl_);
    CMatrix<Real> p;
    const RVector<Real> g = sampled_access_interference(k, x, *ch_, smp.channels, &p);
    const auto h = ch_->user_sbs.col(k);
    const auto gk = ch_->user_mbs.col(k);
    const CMatrix<Real> vg = gk.adjoint() * x.v;  // 1 x K

    RVector<Real> b(smp.size());
    Real signal_curv(0);
    for (Index s = 0; s < smp.size(); ++s) {
      const LinkTerm<Real> t = link_term(family_, z, g(s), aux(smp, s));
      b(s) = c * t.interference_coef;
      signal_curv += c * t.signal_curvature;
      if (t.outer_coef == Real(0)) continue;
      auto [gw, gv] = hess.add_outer(c * t.outer_coef);
      gw.col(k) = h * t.signal_coef;
      for (int j = 0; j < x.n_users(); ++j)
        if (j != k) gw.col(j) = (Real(2) * t.interference_coef * p(s, j)) * smp.channels.col(s);
      gv.noalias() = (Real(2) * t.interference_coef) * gk * vg;
    }
    const CMatrix<Real> co = Real(2) * smp.channels * b.asDiagonal() * smp.channels.adjoint();
    for (int j = 0; j < x.n_users(); ++j)
      if (j != k) hess.w[static_cast<std::size_t>(j)] += co;
    hess.add_all_v(b.sum(), gk);
    if (signal_curv != Real(0)) hess.w[static_cast<std::size_t>(k)] += (Real(2) * signal_curv) * (h * h.adjoint());
    if (prox_ > Real(0) && smp.anchors.size() > 0)
      hess.w[static_cast<std::size_t>(k)].diagonal().array() -= scale * prox_;
  }

 private:
  static LinkAux<Real> aux(const AccessSamples<Real>& smp, Index s) { return {smp.receiver(s), smp.weight(s)}; }

  // gamma/2 * mean_s || w~_s - w_k ||^2
  Real prox_penalty(int k, const BeamformerSet<Real>& x) const {
    const auto& smp = users_[static_cast<std::size_t>(k)];
    if (!(prox_ > Real(0)) || smp.anchors.size() == 0) return Real(0);
    return Real(0.5) * prox_ * (smp.anchors.colwise() - x.w.col(k)).colwise().squaredNorm().mean();
  }

  const ChannelSet<Real>* ch_;
  const Clustering* cl_;
  SurrogateFamily family_;
  std::vector<AccessSamples<Real>> users_;
  Real prox_;
};

/// Receivers for every stored realization evaluated at the expansion point.
template <typename Real>
AccessSamples<Real> build_access_samples(int k, SurrogateFamily family, const BeamformerSet<Real>& x_prime,
                                         const ChannelSet<Real>& ch, const Clustering& cl,
                                         const CMatrix<Real>& channels) {
  AccessSamples<Real> smp;
  smp.channels = channels;
  smp.receiver.resize(channels.cols());
  smp.weight.resize(channels.cols());
  const Complex<Real> z = access_signal(k, x_prime, ch, cl);
  const RVector<Real> g = sampled_access_interference(k, x_prime, ch, channels);
  for (Index s = 0; s < channels.cols(); ++s) {
    const LinkAux<Real> a = optimal_link_aux(family, z, g(s));
    smp.receiver(s) = a.receiver;
    smp.weight(s) = a.weight;
  }
  return smp;
}

// ---------------------------------------------------------------------------
// Jensen deterministic bound

/// A_{u_k} = E[h_{u_k} h_{u_k}^H] over the links without instantaneous CSI.
template <typename Real>
struct JensenMatrix {
  std::vector<CMatrix<Real>> a;  // per user, NL x NL Hermitian
};

/// Block (i, j) of A_k: h^{(i)} h^{(j)H} when both SBSs serve k, beta^{(i)} I on
/// the diagonal for a non-serving SBS, zero otherwise.
template <typename Real>
JensenMatrix<Real> jensen_matrix(const ChannelSet<Real>& ch_known, const LargeScale& ls, const Clustering& cl) {
  const int K = ch_known.n_users();
  const int N = ch_known.n_sbs();
  const Index L = ch_known.sbs_antennas;
  JensenMatrix<Real> jm;
  jm.a.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    CMatrix<Real> a = CMatrix<Real>::Zero(N * L, N * L);
    for (int i = 0; i < N; ++i) {
      if (cl.serves(k, i)) {
        if (ch_known.csi_known.size() > 0 && !ch_known.csi_known(k, i))
          throw InvalidArgument("jensen_matrix: serving link without instantaneous CSI");
        for (int j : cl.sbs_of_user(k))
          a.block(i * L, j * L, L, L) = ch_known.user_sbs_block(k, i) * ch_known.user_sbs_block(k, j).adjoint();
      } else {
        a.block(i * L, i * L, L, L).diagonal().setConstant(static_cast<Real>(ls.user_sbs(k, i)));
      }
    }
    jm.a.push_back(std::move(a));
  }
  return jm;
}

/// Phi-bar_k + sigma^2: the expected access interference plus noise.
template <typename Real>
Real jensen_interference(int k, const BeamformerSet<Real>& x, const JensenMatrix<Real>& jm,
                         const ChannelSet<Real>& ch) {
  const auto& a = jm.a[static_cast<std::size_t>(k)];
  Real g = (x.v.adjoint() * ch.user_mbs.col(k)).squaredNorm() + ch.noise_user(k);
  for (int i = 0; i < x.n_users(); ++i)
    if (i != k) g += std::real(x.w.col(i).dot(a * x.w.col(i)));
  return g;
}

/// Deterministic lower bound on E[R^A_k] with the expectation moved into the
/// interference term.
template <typename Real>
Real jensen_rate(int k, const BeamformerSet<Real>& x, const JensenMatrix<Real>& jm, const ChannelSet<Real>& ch_known,
                 const Clustering& cl) {
  if (!cl.user_active(k)) return Real(0);
  return link_rate(access_signal(k, x, ch_known, cl), jensen_interference(k, x, jm, ch_known));
}

template <typename Real>
class JensenAccessBound {
 public:
  JensenAccessBound(const ChannelSet<Real>& ch, const Clustering& cl, const JensenMatrix<Real>& jm,
                    SurrogateFamily family, std::vector<LinkAux<Real>> aux)
      : ch_(&ch), cl_(&cl), jm_(&jm), family_(family), aux_(std::move(aux)) {}

  static JensenAccessBound at(const BeamformerSet<Real>& x_prime, const ChannelSet<Real>& ch, const Clustering& cl,
                              const JensenMatrix<Real>& jm, SurrogateFamily family) {
    std::vector<LinkAux<Real>> aux;
    for (int k = 0; k < ch.n_users(); ++k)
      aux.push_back(optimal_link_aux(family, access_signal(k, x_prime, ch, cl), jensen_interference(k, x_prime, jm, ch)));
    return JensenAccessBound(ch, cl, jm, family, std::move(aux));
  }

  Real value(int k, const BeamformerSet<Real>& x) const {
    return link_term(family_, access_signal(k, x, *ch_, *cl_), jensen_interference(k, x, *jm_, *ch_),
                     aux_[static_cast<std::size_t>(k)])
        .value;
  }

  void add_gradient(int k, const BeamformerSet<Real>& x, Real scale, BeamformerSet<Real>& grad) const {
    const LinkTerm<Real> t = link_term(family_, access_signal(k, x, *ch_, *cl_), jensen_interference(k, x, *jm_, *ch_),
                                       aux_[static_cast<std::size_t>(k)]);
    grad.w.col(k) += ch_->user_sbs.col(k) * (scale * t.signal_coef);
    const Real b = Real(2) * scale * t.interference_coef;
    const auto& a = jm_->a[static_cast<std::size_t>(k)];
    for (int i = 0; i < x.n_users(); ++i)
      if (i != k) grad.w.col(i) += b * (a * x.w.col(i));
    const auto gk = ch_->user_mbs.col(k);
    grad.v += b * gk * (gk.adjoint() * x.v);
  }

  void add_curvature(int k, const BeamformerSet<Real>& x, Real scale, Curvature<Real>& hess) const {
    const LinkTerm<Real> t = link_term(family_, access_signal(k, x, *ch_, *cl_), jensen_interference(k, x, *jm_, *ch_),
                                       aux_[static_cast<std::size_t>(k)]);
    const Real b = scale * t.interference_coef;
    const auto& a = jm_->a[static_cast<std::size_t>(k)];
    for (int i = 0; i < x.n_users(); ++i)
      if (i != k) hess.w[static_cast<std::size_t>(i)] += (Real(2) * b) * a;
    hess.add_all_v(b, ch_->user_mbs.col(k));
    const auto h = ch_->user_sbs.col(k);
    if (t.signal_curvature != Real(0))
      hess.w[static_cast<std::size_t>(k)] += (Real(2) * scale * t.signal_curvature) * (h * h.adjoint());
    if (t.outer_coef != Real(0)) {
      BeamformerSet<Real> grad = BeamformerSet<Real>::zeros(x.n_users(), x.n_sbs(), x.sbs_antennas, x.v.rows());
      add_gradient(k, x, Real(1), grad);
      hess.add_outer(scale * t.outer_coef, grad);
    }
  }

 private:
  const ChannelSet<Real>* ch_;
  const Clustering* cl_;
  const JensenMatrix<Real>* jm_;
  SurrogateFamily family_;
  std::vector<LinkAux<Real>> aux_;
};

}  // namespace fdsb
