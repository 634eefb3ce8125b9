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

// Shared fixtures for the unit tests and the acceptance binary.

#include "fdsb/fdsb.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <vector>

namespace fdsb::testing {

/// N=4, K=2, M=8, L=2 in a 600 m square.
inline NetworkConfig desk_config(std::uint64_t seed, double mbs_power_dbm = 40.0) {
  NetworkConfig cfg;
  cfg.region_side_m = 600.0;
  cfg.n_sbs = 4;
  cfg.n_users_scheduled = 2;
  cfg.mbs_antennas = 8;
  cfg.sbs_tx_antennas = 2;
  cfg.mbs_exclusion_m = 150.0;
  cfg.mbs_power_dbm = mbs_power_dbm;
  cfg.seed = seed;
  return with_default_weights(cfg);
}

/// Everything one solver call needs, owned in one place so that references
/// handed to bounds stay valid.
struct Instance {
  NetworkConfig cfg;
  ChannelSet<double> ch;
  Clustering cl;
  DecodingOrder ord;
  RVector<double> weights;
  PowerBudgets<double> budgets;

  explicit Instance(const NetworkConfig& c)
      : cfg(with_default_weights(c)),
        ch(generate_instance<double>(cfg)),
        cl(Clustering::full(cfg.n_users_scheduled, cfg.n_sbs)),
        ord(make_decoding_order(ch, cl)),
        weights(Eigen::Map<const RVector<double>>(cfg.weights.data(), cfg.n_users_scheduled)),
        budgets(PowerBudgets<double>::from_config(cfg)) {}

  void set_clustering(const Clustering& c) {
    cl = c;
    ord = make_decoding_order(ch, cl);
  }

  double objective(const BeamformerSet<double>& x) const { return weighted_sum_rate(x, ch, cl, ord, weights); }
};

inline CMatrix<double> complex_normal_matrix(Index rows, Index cols, Rng& rng) {
  CMatrix<double> m(rows, cols);
  for (Index c = 0; c < cols; ++c) m.col(c) = complex_normal<double>(rows, rng);
  return m;
}

/// Feasible point with random direction and a random fraction of every budget.
inline BeamformerSet<double> random_feasible(const Instance& in, Rng& rng) {
  BeamformerSet<double> x = BeamformerSet<double>::zeros_like(in.ch);
  x.w = complex_normal_matrix(x.w.rows(), x.w.cols(), rng);
  x.v = complex_normal_matrix(x.v.rows(), x.v.cols(), rng);
  apply_zero_pattern(x, in.cl);
  std::uniform_real_distribution<double> frac(0.05, 1.0);
  for (int n = 0; n < x.n_sbs(); ++n) {
    const double p = x.sbs_block(n).squaredNorm();
    if (p > 0) x.sbs_block(n) *= std::sqrt(frac(rng) * in.budgets.sbs(n) / p);
  }
  const double pv = x.v.squaredNorm();
  if (pv > 0) x.v *= std::sqrt(frac(rng) * in.budgets.mbs / pv);
  return x;
}

/// Every link active with probability 0.6.
inline Clustering random_clustering(int K, int N, Rng& rng) {
  std::bernoulli_distribution coin(0.6);
  Clustering cl(K, N);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) cl.set(k, n, coin(rng));
  return cl;
}

/// Projection onto {||y|| <= r} as argmin ||y - x||^2 + lambda (||y||^2 - r^2),
/// with the multiplier found by bisection on the KKT condition.
inline CMatrix<double> kkt_ball_projection(const CMatrix<double>& x, double power) {
  const double p = x.squaredNorm();
  if (p <= power) return x;
  double lo = 0.0, hi = 1.0;
  while (p / ((1 + hi) * (1 + hi)) > power) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (p / ((1 + mid) * (1 + mid)) > power ? lo : hi) = mid;
  }
  return x / (1 + 0.5 * (lo + hi));
}

/// Central difference of f along d.
template <typename F>
double directional_fd(const F& f, const BeamformerSet<double>& x, const BeamformerSet<double>& d, double eps) {
  return (f(x + eps * d) - f(x - eps * d)) / (2.0 * eps);
}

/// Smallest gap between the active min-term of any weighted user and the
/// next term; the composite bound is differentiable where this is positive.
template <typename Bound>
double min_term_gap(const Bound& bound, const BeamformerSet<double>& x) {
  const auto p = bound.prepare(x);
  std::vector<double> terms;
  double gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < bound.channels().n_users(); ++k) {
    if (!bound.clustering().user_active(k) || bound.weights()(k) == 0.0) continue;
    bound.term_values(k, x, p, terms);
    std::sort(terms.begin(), terms.end());
    if (terms.size() > 1) gap = std::min(gap, terms[1] - terms[0]);
  }
  return gap;
}

/// Random direction with the instance's zero pattern and unit scale per
/// base station budget.
inline BeamformerSet<double> random_direction(const Instance& in, Rng& rng) {
  BeamformerSet<double> d = BeamformerSet<double>::zeros_like(in.ch);
  d.w = complex_normal_matrix(d.w.rows(), d.w.cols(), rng);
  d.v = complex_normal_matrix(d.v.rows(), d.v.cols(), rng);
  apply_zero_pattern(d, in.cl);
  for (int n = 0; n < d.n_sbs(); ++n) d.sbs_block(n) *= std::sqrt(in.budgets.sbs(n));
  d.v *= std::sqrt(in.budgets.mbs);
  return d;
}

/// Direction mixing the normalized gradient with random noise, scaled to |x|;
/// keeps the directional derivative well away from zero.
inline BeamformerSet<double> probe_direction(const Instance& in, const BeamformerSet<double>& x,
                                             const BeamformerSet<double>& grad, Rng& rng) {
  const BeamformerSet<double> r = random_direction(in, rng);
  const double scale = std::sqrt(x.w.squaredNorm() + x.v.squaredNorm());
  const double gn = std::sqrt(grad.w.squaredNorm() + grad.v.squaredNorm());
  const double rn = std::sqrt(r.w.squaredNorm() + r.v.squaredNorm());
  return (scale / gn) * grad + (0.3 * scale / rn) * r;
}

}  // namespace fdsb::testing
