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

// Backhaul-link lower bounds, one per served (k, n) pair.

#include "fdsb/rate_model.hpp"
#include "fdsb/surrogates/curvature.hpp"
#include "fdsb/surrogates/link.hpp"

namespace fdsb {

/// Products shared by every backhaul term at one point x.
template <typename Real>
struct BackhaulProducts {
  CMatrix<Real> mbs;     // N x K, (n, i) = h_{b_n}^{(b_0)H} v_i
  CMatrix<Real> sbs;     // N x K, (n, i) = sum_j h_{b_n}^{(b_j)H} w_{i,j}
  RVector<Real> si;      // N, sum_{i in K_n} ||w_{i,n}||^2
};

template <typename Real>
BackhaulProducts<Real> backhaul_products(const BeamformerSet<Real>& x, const ChannelSet<Real>& ch,
                                         const Clustering& cl) {
  BackhaulProducts<Real> p{ch.sbs_mbs.adjoint() * x.v, ch.sbs_sbs.adjoint() * x.w, RVector<Real>::Zero(ch.n_sbs())};
  for (int n = 0; n < ch.n_sbs(); ++n)
    for (int i : cl.users_of_sbs(n)) p.si(n) += x.access(i, n).squaredNorm();
  return p;
}

/// Delta_{k,n} + sigma^2 from prepared products.
template <typename Real>
Real backhaul_interference(int k, int n, const BackhaulProducts<Real>& p, const ChannelSet<Real>& ch,
                           const Clustering& cl, const DecodingOrder& ord) {
  Real g = ch.beta_si * p.si(n) + ch.noise_sbs(n);
  for (int i : ord.sic_set(k, n)) g += abs2(p.mbs(n, i));
  for (int i = 0; i < ch.n_users(); ++i)
    if (!cl.serves(i, n)) g += abs2(p.sbs(n, i));
  return g;
}

template <typename Real>
class BackhaulBound {
 public:
  BackhaulBound() = default;
  BackhaulBound(const ChannelSet<Real>& ch, const Clustering& cl, const DecodingOrder& ord, SurrogateFamily family,
                std::vector<LinkAux<Real>> aux)
      : ch_(&ch), cl_(&cl), ord_(&ord), family_(family), aux_(std::move(aux)) {}

  /// Bound that is tight at x_prime.
  static BackhaulBound at(const BeamformerSet<Real>& x_prime, const ChannelSet<Real>& ch, const Clustering& cl,
                          const DecodingOrder& ord, SurrogateFamily family) {
    const int N = ch.n_sbs();
    std::vector<LinkAux<Real>> aux(static_cast<std::size_t>(ch.n_users() * N));
    const auto p = backhaul_products(x_prime, ch, cl);
    for (int k = 0; k < ch.n_users(); ++k)
      for (int n : cl.sbs_of_user(k))
        aux[static_cast<std::size_t>(k * N + n)] =
            optimal_link_aux(family, p.mbs(n, k), backhaul_interference(k, n, p, ch, cl, ord));
    return BackhaulBound(ch, cl, ord, family, std::move(aux));
  }

  SurrogateFamily family() const { return family_; }
  const LinkAux<Real>& aux(int k, int n) const { return aux_[static_cast<std::size_t>(k * ch_->n_sbs() + n)]; }

  LinkTerm<Real> term(int k, int n, const BackhaulProducts<Real>& p) const {
    return link_term(family_, p.mbs(n, k), backhaul_interference(k, n, p, *ch_, *cl_, *ord_), aux(k, n));
  }

  Real value(int k, int n, const BeamformerSet<Real>& x) const { return term(k, n, backhaul_products(x, *ch_, *cl_)).value; }

  void add_gradient(int k, int n, const BeamformerSet<Real>& x, const BackhaulProducts<Real>& p, Real scale,
                    BeamformerSet<Real>& grad) const {
    const LinkTerm<Real> t = term(k, n, p);
    const auto a = ch_->sbs_mbs.col(n);
    const auto b = ch_->sbs_sbs.col(n);
    grad.v.col(k) += a * (scale * t.signal_coef);
    const Real c = Real(2) * scale * t.interference_coef;
    for (int i : ord_->sic_set(k, n)) grad.v.col(i) += a * (c * p.mbs(n, i));
    for (int i = 0; i < ch_->n_users(); ++i) {
      if (cl_->serves(i, n))
        grad.access(i, n) += (c * ch_->beta_si) * x.access(i, n);
      else
        grad.w.col(i) += b * (c * p.sbs(n, i));
    }
  }

  void add_curvature(int k, int n, const BeamformerSet<Real>& x, const BackhaulProducts<Real>& p, Real scale,
                     Curvature<Real>& hess) const {
    const LinkTerm<Real> t = term(k, n, p);
    const auto a = ch_->sbs_mbs.col(n);
    const auto b = ch_->sbs_sbs.col(n);
    const Real c = Real(2) * scale * t.interference_coef;
    const CMatrix<Real> aa = a * a.adjoint();
    for (int i : ord_->sic_set(k, n)) hess.v[static_cast<std::size_t>(i)] += c * aa;
    if (t.signal_curvature != Real(0)) hess.v[static_cast<std::size_t>(k)] += (Real(2) * scale * t.signal_curvature) * aa;
    const Index L = ch_->sbs_antennas;
    CMatrix<Real> bb;
    for (int i = 0; i < ch_->n_users(); ++i) {
      auto& blk = hess.w[static_cast<std::size_t>(i)];
      if (cl_->serves(i, n)) {
        blk.diagonal().segment(n * L, L).array() += c * ch_->beta_si;
      } else {
        if (bb.size() == 0) bb = b * b.adjoint();
        blk += c * bb;
      }
    }
    if (t.outer_coef != Real(0)) {
      BeamformerSet<Real> grad = BeamformerSet<Real>::zeros(x.n_users(), x.n_sbs(), x.sbs_antennas, x.v.rows());
      add_gradient(k, n, x, p, Real(1), grad);
      hess.add_outer(scale * t.outer_coef, grad);
    }
  }

 private:
  const ChannelSet<Real>* ch_ = nullptr;
  const Clustering* cl_ = nullptr;
  const DecodingOrder* ord_ = nullptr;
  SurrogateFamily family_ = SurrogateFamily::sinrc;
  std::vector<LinkAux<Real>> aux_;
};

}  // namespace fdsb
