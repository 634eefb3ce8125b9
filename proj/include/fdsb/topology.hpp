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

// Network geometry, large-scale fading and small-scale channel realizations.
//
// Coordinates are centred on the MBS: the square region spans
// [-side/2, side/2]^2. Path-loss distances are taken in kilometres.

#include "fdsb/common.hpp"

#include <vector>

namespace fdsb {

struct NetworkConfig {
  double region_side_m = 1000.0;
  int n_sbs = 8;              // N
  int n_users_scheduled = 3;  // K
  int mbs_antennas = 32;      // M
  int sbs_tx_antennas = 2;    // L
  double mbs_exclusion_m = 250.0;
  double sbs_exclusion_m = 50.0;
  double bandwidth_hz = 10e6;
  double noise_psd_dbm_hz = -174.0;
  double si_cancellation_db = 100.0;
  double mbs_power_dbm = 40.0;
  double sbs_power_dbm = 30.0;
  double antenna_gain_mbs_dbi = 15.0;
  double antenna_gain_sbs_dbi = 5.0;
  double shadow_std_macro_db = 8.0;
  double shadow_std_small_db = 10.0;
  std::vector<double> weights;  // one per scheduled user
  std::uint64_t seed = 1;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;

  double noise_power_w() const { return dbm_to_watts(noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz)); }
  double si_residual() const { return db_to_linear(-si_cancellation_db); }
  double mbs_power_w() const { return dbm_to_watts(mbs_power_dbm); }
  double sbs_power_w() const { return dbm_to_watts(sbs_power_dbm); }
};

/// Fills weights with ones when empty.
NetworkConfig with_default_weights(NetworkConfig cfg);

struct Topology {
  Eigen::Vector2d mbs_pos = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> sbs_pos;
  std::vector<Eigen::Vector2d> user_pos;
};

/// Linear power gains including path loss, shadowing and transmit antenna gain.
struct LargeScale {
  Eigen::VectorXd user_mbs;  // K
  Eigen::MatrixXd user_sbs;  // K x N
  Eigen::VectorXd sbs_mbs;   // N
  Eigen::MatrixXd sbs_sbs;   // N x N, (n, j): SBS j -> SBS n; diagonal unused (0)

  /// All used entries strictly positive and finite.
  bool valid() const;
};

// Path loss in dB with d in kilometres.
double path_loss_mbs_user_db(double d_km);
double path_loss_sbs_user_db(double d_km);
double path_loss_mbs_sbs_db(double d_km);
double path_loss_sbs_sbs_db(double d_km);

/// SBS sites: centres of the non-centre cells of the smallest odd grid that
/// fits n_sbs, walked ring by ring and picked at even spacing.
std::vector<Eigen::Vector2d> sbs_grid_positions(int n_sbs, double region_side_m);

bool respects_exclusion(const Eigen::Vector2d& user, const Topology& topo, const NetworkConfig& cfg);

Topology generate_topology(const NetworkConfig& cfg, Rng& rng);

LargeScale compute_large_scale(const Topology& topo, const NetworkConfig& cfg, Rng& rng);

/// One small-scale realization scaled by the large-scale gains.
///
/// Storage is stacked so that inner products against stacked beamformers are a
/// single dot product:
///  - user_mbs: M x K, column k is h_{u_k}^{(b_0)}
///  - user_sbs: NL x K, column k stacks h_{u_k}^{(b_n)} for n = 0..N-1
///  - sbs_mbs:  M x N, column n is h_{b_n}^{(b_0)}
///  - sbs_sbs:  NL x N, column n stacks h_{b_n}^{(b_j)}; block j = n is zero
///    (self-interference enters only through beta_si)
template <typename Real>
struct ChannelSet {
  CMatrix<Real> user_mbs;
  CMatrix<Real> user_sbs;
  CMatrix<Real> sbs_mbs;
  CMatrix<Real> sbs_sbs;
  LargeScale large_scale;
  RVector<Real> noise_user;
  RVector<Real> noise_sbs;
  Real beta_si = Real(0);
  Index sbs_antennas = 0;
  BoolMatrix csi_known;  // K x N availability of the user_sbs blocks

  int n_users() const { return static_cast<int>(user_sbs.cols()); }
  int n_sbs() const { return static_cast<int>(sbs_mbs.cols()); }
  Index mbs_antennas() const { return user_mbs.rows(); }

  auto user_sbs_block(int k, int n) { return user_sbs.col(k).segment(n * sbs_antennas, sbs_antennas); }
  auto user_sbs_block(int k, int n) const { return user_sbs.col(k).segment(n * sbs_antennas, sbs_antennas); }
  auto sbs_sbs_block(int n, int j) { return sbs_sbs.col(n).segment(j * sbs_antennas, sbs_antennas); }
  auto sbs_sbs_block(int n, int j) const { return sbs_sbs.col(n).segment(j * sbs_antennas, sbs_antennas); }
};

template <typename Real>
ChannelSet<Real> sample_channels(const LargeScale& ls, const NetworkConfig& cfg, Rng& rng) {
  if (!ls.valid()) throw InvalidArgument("sample_channels: large-scale gains must be positive and finite");
  const int K = cfg.n_users_scheduled;
  const int N = cfg.n_sbs;
  const Index M = cfg.mbs_antennas;
  const Index L = cfg.sbs_tx_antennas;
  require(ls.user_sbs.rows() == K && ls.user_sbs.cols() == N, "sample_channels: LargeScale dimensions mismatch");

  ChannelSet<Real> ch;
  ch.sbs_antennas = L;
  ch.large_scale = ls;
  ch.user_mbs.resize(M, K);
  ch.user_sbs.resize(N * L, K);
  ch.sbs_mbs.resize(M, N);
  ch.sbs_sbs = CMatrix<Real>::Zero(N * L, N);

  for (int k = 0; k < K; ++k) {
    ch.user_mbs.col(k) = complex_normal<Real>(M, rng) * static_cast<Real>(std::sqrt(ls.user_mbs(k)));
    for (int n = 0; n < N; ++n)
      ch.user_sbs_block(k, n) = complex_normal<Real>(L, rng) * static_cast<Real>(std::sqrt(ls.user_sbs(k, n)));
  }
  for (int n = 0; n < N; ++n) {
    ch.sbs_mbs.col(n) = complex_normal<Real>(M, rng) * static_cast<Real>(std::sqrt(ls.sbs_mbs(n)));
    for (int j = 0; j < N; ++j) {
      if (j == n) continue;
      ch.sbs_sbs_block(n, j) = complex_normal<Real>(L, rng) * static_cast<Real>(std::sqrt(ls.sbs_sbs(n, j)));
    }
  }
  const auto noise = static_cast<Real>(cfg.noise_power_w());
  ch.noise_user = RVector<Real>::Constant(K, noise);
  ch.noise_sbs = RVector<Real>::Constant(N, noise);
  ch.beta_si = static_cast<Real>(cfg.si_residual());
  ch.csi_known = BoolMatrix::Constant(K, N, true);
  return ch;
}

/// Topology, large-scale gains and one channel realization from cfg.seed.
template <typename Real>
ChannelSet<Real> generate_instance(const NetworkConfig& cfg, Topology* topo_out = nullptr) {
  cfg.validate();
  Rng rng(cfg.seed);
  Topology topo = generate_topology(cfg, rng);
  const LargeScale ls = compute_large_scale(topo, cfg, rng);
  ChannelSet<Real> ch = sample_channels<Real>(ls, cfg, rng);
  if (topo_out) *topo_out = std::move(topo);
  return ch;
}

}  // namespace fdsb
