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

// Min-composition of access and backhaul bounds into the weighted-sum
// surrogate of one user-centric network:
//
//   f^(x) = sum_k w_k min(access_k(x), min_{n in N_k} backhaul_{k,n}(x))
//
// The exact value uses the hard min. With smoothing > 0 the min is replaced
// by a soft-min  m - mu log sum exp(-(t - m)/mu)  (a concave lower bound on
// the hard min, within mu log(#terms)), whose gradient is the softmax
// weighted combination of the term gradients. With smoothing = 0 the
// gradient is the subgradient of the first active term, access before
// backhaul and backhaul by ascending SBS index.

#include "fdsb/surrogates/access.hpp"
#include "fdsb/surrogates/backhaul.hpp"

#include <optional>

namespace fdsb {

template <typename Real>
struct BoundEvaluation {
  Real value = Real(0);     // exact composite bound
  Real smoothed = Real(0);  // soft-min surrogate actually differentiated
  RVector<Real> per_user;   // R^_k
  std::optional<BeamformerSet<Real>> gradient;

  bool finite() const { return value > kNegInf<Real>; }
};

template <typename Real, typename Access>
class CompositeBound {
 public:
  CompositeBound(const ChannelSet<Real>& ch, const Clustering& cl, const RVector<Real>& weights, Access access,
                 BackhaulBound<Real> backhaul)
      : ch_(&ch), cl_(&cl), weights_(weights), access_(std::move(access)), backhaul_(std::move(backhaul)) {}

  const Access& access() const { return access_; }
  const BackhaulBound<Real>& backhaul() const { return backhaul_; }

  BoundEvaluation<Real> operator()(const BeamformerSet<Real>& x, Real smoothing = Real(0),
                                   bool with_gradient = false) const {
    const int K = ch_->n_users();
    BoundEvaluation<Real> out;
    out.per_user = RVector<Real>::Zero(K);
    if (with_gradient) out.gradient = BeamformerSet<Real>::zeros_like(*ch_);
    const BackhaulProducts<Real> p = backhaul_products(x, *ch_, *cl_);

    std::vector<Real> terms;
    for (int k = 0; k < K; ++k) {
      if (!cl_->user_active(k)) continue;
      const auto& sbs = cl_->sbs_of_user(k);
      terms.assign(1, access_.value(k, x));
      for (int n : sbs) terms.push_back(backhaul_.term(k, n, p).value);

      const auto first_min = std::min_element(terms.begin(), terms.end());
      const Real m = *first_min;
      out.per_user(k) = m;
      const Real wk = weights_(k);
      if (wk == Real(0)) continue;
      if (m == kNegInf<Real>) {
        out.value = out.smoothed = kNegInf<Real>;
        out.gradient.reset();
        return out;
      }
      out.value += wk * m;

      if (!(smoothing > Real(0))) {
        out.smoothed += wk * m;
        if (with_gradient) {
          const auto i = static_cast<std::size_t>(first_min - terms.begin());
          add_term_gradient(k, i, x, p, wk, *out.gradient);
        }
        continue;
      }
      Real sum(0);
      for (Real t : terms) sum += std::exp(-(t - m) / smoothing);
      out.smoothed += wk * (m - smoothing * std::log(sum));
      if (with_gradient)
        for (std::size_t i = 0; i < terms.size(); ++i) {
          const Real pi = std::exp(-(terms[i] - m) / smoothing) / sum;
          if (pi > Real(1e-14)) add_term_gradient(k, i, x, p, wk * pi, *out.gradient);
        }
    }
    if (with_gradient) apply_zero_pattern(*out.gradient, *cl_);
    return out;
  }

  const ChannelSet<Real>& channels() const { return *ch_; }
  const Clustering& clustering() const { return *cl_; }
  const RVector<Real>& weights() const { return weights_; }

  // Term-level access for second-order solvers. Term 0 is the access bound,
  // term i > 0 the backhaul bound of the i-th SBS in N_k.

  BackhaulProducts<Real> prepare(const BeamformerSet<Real>& x) const { return backhaul_products(x, *ch_, *cl_); }

  void term_values(int k, const BeamformerSet<Real>& x, const BackhaulProducts<Real>& p, std::vector<Real>& out) const {
    out.assign(1, access_.value(k, x));
    for (int n : cl_->sbs_of_user(k)) out.push_back(backhaul_.term(k, n, p).value);
  }

  void add_term_curvature(int k, std::size_t i, const BeamformerSet<Real>& x, const BackhaulProducts<Real>& p,
                          Real scale, Curvature<Real>& hess) const {
    if (i == 0)
      access_.add_curvature(k, x, scale, hess);
    else
      backhaul_.add_curvature(k, cl_->sbs_of_user(k)[i - 1], x, p, scale, hess);
  }

  void add_term_gradient(int k, std::size_t i, const BeamformerSet<Real>& x, const BackhaulProducts<Real>& p,
                         Real scale, BeamformerSet<Real>& grad) const {
    if (i == 0)
      access_.add_gradient(k, x, scale, grad);
    else
      backhaul_.add_gradient(k, cl_->sbs_of_user(k)[i - 1], x, p, scale, grad);
  }

 private:
  const ChannelSet<Real>* ch_;
  const Clustering* cl_;
  RVector<Real> weights_;
  Access access_;
  BackhaulBound<Real> backhaul_;
};

}  // namespace fdsb
