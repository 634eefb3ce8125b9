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

// Exact rate evaluation for the two-hop downlink: interference aggregates,
// SIC ordering, access/backhaul/end-to-end rates and the feasible set X_c.
// Rates are spectral efficiencies in bits/s/Hz.

#include "fdsb/topology.hpp"

#include <algorithm>
#include <ostream>
#include <vector>

namespace fdsb {

/// Binary SBS-user association c[k][n] with cached N_k and K_n.
class Clustering {
 public:
  Clustering() = default;
  Clustering(int n_users, int n_sbs, bool value = false);

  static Clustering full(int n_users, int n_sbs) { return Clustering(n_users, n_sbs, true); }

  int n_users() const { return n_users_; }
  int n_sbs() const { return n_sbs_; }

  bool serves(int k, int n) const { return c_[index(k, n)] != 0; }
  void set(int k, int n, bool value);

  /// N_k, ascending.
  const std::vector<int>& sbs_of_user(int k) const { return sbs_of_user_[static_cast<std::size_t>(k)]; }
  /// K_n, ascending.
  const std::vector<int>& users_of_sbs(int n) const { return users_of_sbs_[static_cast<std::size_t>(n)]; }

  int active_links() const;
  bool any() const { return active_links() > 0; }
  bool user_active(int k) const { return !sbs_of_user(k).empty(); }

  bool operator==(const Clustering& other) const = default;

 private:
  std::size_t index(int k, int n) const { return static_cast<std::size_t>(k * n_sbs_ + n); }
  void rebuild();

  int n_users_ = 0;
  int n_sbs_ = 0;
  std::vector<unsigned char> c_;
  std::vector<std::vector<int>> sbs_of_user_;
  std::vector<std::vector<int>> users_of_sbs_;
};

/// SIC decoding order shared by all SBSs: users with larger aggregate access
/// gain H_k are decoded first. Equal gains: the lower user index decodes later.
class DecodingOrder {
 public:
  DecodingOrder() = default;
  DecodingOrder(std::vector<double> aggregate_gain, const Clustering& cl);

  /// Same gains, SIC sets recomputed for another clustering.
  DecodingOrder rebind(const Clustering& cl) const { return DecodingOrder(gain_, cl); }

  const std::vector<double>& aggregate_gain() const { return gain_; }
  /// Users sorted by decreasing decoding priority.
  const std::vector<int>& order() const { return order_; }

  /// True when user i is decoded after user k.
  bool weaker(int i, int k) const {
    const auto a = gain_[static_cast<std::size_t>(i)];
    const auto b = gain_[static_cast<std::size_t>(k)];
    return a < b || (a == b && i < k);
  }

  /// I_{k,n}: users whose backhaul signal still interferes when SBS n decodes user k.
  /// Empty unless k is served by n.
  const std::vector<int>& sic_set(int k, int n) const {
    return sic_sets_[static_cast<std::size_t>(k * n_sbs_ + n)];
  }

 private:
  std::vector<double> gain_;
  std::vector<int> order_;
  int n_sbs_ = 0;
  std::vector<std::vector<int>> sic_sets_;
};

template <typename Real>
DecodingOrder make_decoding_order(const ChannelSet<Real>& ch, const Clustering& cl) {
  std::vector<double> gain(static_cast<std::size_t>(ch.n_users()));
  for (int k = 0; k < ch.n_users(); ++k) gain[static_cast<std::size_t>(k)] = static_cast<double>(ch.user_sbs.col(k).squaredNorm());
  return DecodingOrder(std::move(gain), cl);
}

/// The optimization variable x = {w, v}.
///  - w: NL x K, column k stacks w_{k,n} over SBSs
///  - v: M x K, column k is the multicast beamformer v_k
template <typename Real>
struct BeamformerSet {
  CMatrix<Real> w;
  CMatrix<Real> v;
  Index sbs_antennas = 0;

  static BeamformerSet zeros(int n_users, int n_sbs, Index sbs_antennas, Index mbs_antennas) {
    return {CMatrix<Real>::Zero(n_sbs * sbs_antennas, n_users), CMatrix<Real>::Zero(mbs_antennas, n_users),
            sbs_antennas};
  }
  static BeamformerSet zeros_like(const ChannelSet<Real>& ch) {
    return zeros(ch.n_users(), ch.n_sbs(), ch.sbs_antennas, ch.mbs_antennas());
  }

  int n_users() const { return static_cast<int>(w.cols()); }
  int n_sbs() const { return sbs_antennas ? static_cast<int>(w.rows() / sbs_antennas) : 0; }

  auto access(int k, int n) { return w.col(k).segment(n * sbs_antennas, sbs_antennas); }
  auto access(int k, int n) const { return w.col(k).segment(n * sbs_antennas, sbs_antennas); }
  /// Rows of w transmitted by SBS n (all users).
  auto sbs_block(int n) { return w.middleRows(n * sbs_antennas, sbs_antennas); }
  auto sbs_block(int n) const { return w.middleRows(n * sbs_antennas, sbs_antennas); }

  Real squared_norm() const { return w.squaredNorm() + v.squaredNorm(); }
  Real norm() const { return std::sqrt(squared_norm()); }

  BeamformerSet& operator+=(const BeamformerSet& o) {
    w += o.w;
    v += o.v;
    return *this;
  }
  BeamformerSet& operator-=(const BeamformerSet& o) {
    w -= o.w;
    v -= o.v;
    return *this;
  }
  BeamformerSet& operator*=(Real s) {
    w *= s;
    v *= s;
    return *this;
  }
};

template <typename Real>
BeamformerSet<Real> operator+(BeamformerSet<Real> a, const BeamformerSet<Real>& b) {
  return a += b;
}
template <typename Real>
BeamformerSet<Real> operator-(BeamformerSet<Real> a, const BeamformerSet<Real>& b) {
  return a -= b;
}
template <typename Real>
BeamformerSet<Real> operator*(Real s, BeamformerSet<Real> a) {
  return a *= s;
}
template <typename Real>
BeamformerSet<Real> operator*(BeamformerSet<Real> a, Real s) {
  return a *= s;
}

/// Re<a, b> over the real embedding of x; the pairing used for gradients.
template <typename Real>
Real real_inner(const BeamformerSet<Real>& a, const BeamformerSet<Real>& b) {
  return std::real(a.w.cwiseProduct(b.w.conjugate()).sum()) + std::real(a.v.cwiseProduct(b.v.conjugate()).sum());
}

/// Per-BS peak powers in Watts.
template <typename Real>
struct PowerBudgets {
  Real mbs = Real(0);
  RVector<Real> sbs;

  static PowerBudgets uniform(int n_sbs, Real mbs_w, Real sbs_w) { return {mbs_w, RVector<Real>::Constant(n_sbs, sbs_w)}; }
  static PowerBudgets from_config(const NetworkConfig& cfg) {
    return uniform(cfg.n_sbs, static_cast<Real>(cfg.mbs_power_w()), static_cast<Real>(cfg.sbs_power_w()));
  }
};

template <typename Real>
struct RateReport {
  RVector<Real> access;            // R^A_k
  RMatrix<Real> backhaul_per_sbs;  // R^B_{k,n}, zero where c[k][n] = 0
  RVector<Real> backhaul;          // R^B_k
  RVector<Real> end_to_end;        // R_k
  RVector<Real> weights;
  Real weighted_sum = Real(0);
};

// ---------------------------------------------------------------------------
// Access link

/// sum_{j in N_k} h_{u_k}^{(b_j)H} w_{k,j}
template <typename Real>
Complex<Real> access_signal(int k, const BeamformerSet<Real>& x, const ChannelSet<Real>& ch, const Clustering& cl) {
  Complex<Real> s(0);
  for (int j : cl.sbs_of_user(k)) s += ch.user_sbs_block(k, j).dot(x.access(k, j));
  return s;
}

/// Phi_k: cross-link MBS power plus co-link SBS power at user k.
template <typename Real>
Real interference_access(int k, const BeamformerSet<Real>& x, const ChannelSet<Real>& ch, const Clustering& cl) {
  Real phi = (x.v.adjoint() * ch.user_mbs.col(k)).squaredNorm();
  for (int i = 0; i < ch.n_users(); ++i) {
    if (i == k) continue;
    Complex<Real> s(0);
    for (int j : cl.sbs_of_user(i)) s += ch.user_sbs_block(k, j).dot(x.access(i, j));
    phi += abs2(s);
  }
  return phi;
}

template <typename Real>
Real access_rate(int k, const BeamformerSet<Real>& x, const ChannelSet<Real>& ch, const Clustering& cl) {
  if (!cl.user_active(k)) return Real(0);
  const Real signal = abs2(access_signal(k, x, ch, cl));
  return std::log2(Real(1) + signal / (interference_access(k, x, ch, cl) + ch.noise_user(k)));
}

// ---------------------------------------------------------------------------
// Backhaul link

/// Delta_{k,n}: uncancelled backhaul co-link, access cross-link and residual SI at SBS n.
template <typename Real>
Real interference_backhaul(int k, int n, const BeamformerSet<Real>& x, const ChannelSet<Real>& ch, const Clustering& cl,
                           const DecodingOrder& ord) {
  if (!cl.serves(k, n)) throw InvalidArgument("interference_backhaul: user is not served by this SBS");
  const auto a = ch.sbs_mbs.col(n);
  Real delta(0);
  for (int i : ord.sic_set(k, n)) delta += abs2(a.dot(x.v.col(i)));
  for (int i = 0; i < ch.n_users(); ++i) {
    if (cl.serves(i, n)) continue;
    Complex<Real> s(0);
    for (int j : cl.sbs_of_user(i)) s += ch.sbs_sbs_block(n, j).dot(x.access(i, j));
    delta += abs2(s);
  }
  Real si(0);
  for (int i : cl.users_of_sbs(n)) si += x.access(i, n).squaredNorm();
  return delta + ch.beta_si * si;
}

template <typename Real>
Real backhaul_rate_per_sbs(int k, int n, const BeamformerSet<Real>& x, const ChannelSet<Real>& ch, const Clustering& cl,
                           const DecodingOrder& ord) {
  const Real delta = interference_backhaul(k, n, x, ch, cl, ord);
  const Real signal = abs2(ch.sbs_mbs.col(n).dot(x.v.col(k)));
  return std::log2(Real(1) + signal / (delta + ch.noise_sbs(n)));
}

/// Access, backhaul and end-to-end rates of every user plus the weighted sum.
template <typename Real>
RateReport<Real> end_to_end_rates(const BeamformerSet<Real>& x, const ChannelSet<Real>& ch, const Clustering& cl,
                                  const DecodingOrder& ord, const RVector<Real>& weights) {
  const int K = ch.n_users();
  RateReport<Real> r;
  r.access = RVector<Real>::Zero(K);
  r.backhaul = RVector<Real>::Zero(K);
  r.end_to_end = RVector<Real>::Zero(K);
  r.backhaul_per_sbs = RMatrix<Real>::Zero(K, ch.n_sbs());
  r.weights = weights;
  for (int k = 0; k < K; ++k) {
    if (!cl.user_active(k)) continue;
    r.access(k) = access_rate(k, x, ch, cl);
    Real worst = std::numeric_limits<Real>::infinity();
    for (int n : cl.sbs_of_user(k)) {
      r.backhaul_per_sbs(k, n) = backhaul_rate_per_sbs(k, n, x, ch, cl, ord);
      worst = std::min(worst, r.backhaul_per_sbs(k, n));
    }
    r.backhaul(k) = worst;
    r.end_to_end(k) = std::min(r.access(k), worst);
  }
  r.weighted_sum = weights.dot(r.end_to_end);
  return r;
}

template <typename Real>
Real weighted_sum_rate(const BeamformerSet<Real>& x, const ChannelSet<Real>& ch, const Clustering& cl,
                       const DecodingOrder& ord, const RVector<Real>& weights) {
  return end_to_end_rates(x, ch, cl, ord, weights).weighted_sum;
}

// ---------------------------------------------------------------------------
// Feasible set X_c

/// Zeroes every block outside the clustering pattern (w_{k,n} with c = 0 and
/// v_k of users without any serving SBS).
template <typename Real>
void apply_zero_pattern(BeamformerSet<Real>& x, const Clustering& cl) {
  for (int k = 0; k < x.n_users(); ++k) {
    for (int n = 0; n < x.n_sbs(); ++n)
      if (!cl.serves(k, n)) x.access(k, n).setZero();
    if (!cl.user_active(k)) x.v.col(k).setZero();
  }
}

/// Euclidean projection onto X_c: zero-pattern, then per-BS ball scaling.
/// Blocks within a few ulps of their budget are left alone, which keeps the
/// map exactly idempotent under rounding.
template <typename Real>
BeamformerSet<Real> project_feasible(BeamformerSet<Real> x, const Clustering& cl, const PowerBudgets<Real>& budgets) {
  constexpr Real slack = Real(1) + Real(16) * std::numeric_limits<Real>::epsilon();
  apply_zero_pattern(x, cl);
  for (int n = 0; n < x.n_sbs(); ++n) {
    const Real p = x.sbs_block(n).squaredNorm();
    if (p > budgets.sbs(n) * slack) x.sbs_block(n) *= std::sqrt(budgets.sbs(n) / p);
  }
  const Real pv = x.v.squaredNorm();
  if (pv > budgets.mbs * slack) x.v *= std::sqrt(budgets.mbs / pv);
  return x;
}

template <typename Real>
bool is_feasible(const BeamformerSet<Real>& x, const Clustering& cl, const PowerBudgets<Real>& budgets,
                 Real rel_tol = Real(1e-12)) {
  for (int k = 0; k < x.n_users(); ++k) {
    for (int n = 0; n < x.n_sbs(); ++n)
      if (!cl.serves(k, n) && x.access(k, n).squaredNorm() != Real(0)) return false;
    if (!cl.user_active(k) && x.v.col(k).squaredNorm() != Real(0)) return false;
  }
  for (int n = 0; n < x.n_sbs(); ++n)
    if (x.sbs_block(n).squaredNorm() > budgets.sbs(n) * (Real(1) + rel_tol)) return false;
  return x.v.squaredNorm() <= budgets.mbs * (Real(1) + rel_tol);
}

/// One CSV row per user: trial,user,access,backhaul,end_to_end,weight
template <typename Real>
void write_rate_rows(std::ostream& os, long trial, const RateReport<Real>& r) {
  for (Index k = 0; k < r.end_to_end.size(); ++k)
    os << trial << ',' << k << ',' << r.access(k) << ',' << r.backhaul(k) << ',' << r.end_to_end(k) << ','
       << r.weights(k) << '\n';
}

inline constexpr const char* kRateCsvHeader = "trial,user,access,backhaul,end_to_end,weight";

}  // namespace fdsb
