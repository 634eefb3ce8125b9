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

#include "fdsb/topology.hpp"

#include <algorithm>
#include <numeric>

namespace fdsb {

namespace {

constexpr int kMaxRedraws = 10000;

double link_gain(double path_loss_db, double shadow_db, double tx_gain_dbi) {
  return std::pow(10.0, -(path_loss_db + shadow_db - tx_gain_dbi) / 10.0);
}

}  // namespace

void NetworkConfig::validate() const {
  require(n_sbs >= 1 && n_users_scheduled >= 1 && mbs_antennas >= 1 && sbs_tx_antennas >= 1,
          "NetworkConfig: all counts must be >= 1");
  require(region_side_m > 0.0, "NetworkConfig: region_side_m must be positive");
  require(mbs_exclusion_m >= 0.0 && sbs_exclusion_m >= 0.0, "NetworkConfig: exclusion radii must be >= 0");
  require(mbs_exclusion_m < region_side_m / 2 && sbs_exclusion_m < region_side_m / 2,
          "NetworkConfig: exclusion radii must be below region_side_m / 2");
  require(bandwidth_hz > 0.0, "NetworkConfig: bandwidth_hz must be positive");
  require(shadow_std_macro_db >= 0.0 && shadow_std_small_db >= 0.0, "NetworkConfig: shadowing std must be >= 0");
  require(static_cast<int>(weights.size()) == n_users_scheduled, "NetworkConfig: weights must have one entry per user");
  bool any_positive = false;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, "NetworkConfig: weights must be finite and >= 0");
    any_positive = any_positive || w > 0.0;
  }
  require(any_positive, "NetworkConfig: weights must not all be zero");
}

NetworkConfig with_default_weights(NetworkConfig cfg) {
  if (cfg.weights.empty()) cfg.weights.assign(static_cast<std::size_t>(std::max(cfg.n_users_scheduled, 0)), 1.0);
  return cfg;
}

bool LargeScale::valid() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  for (Index i = 0; i < user_mbs.size(); ++i)
    if (!positive(user_mbs(i))) return false;
  for (Index i = 0; i < user_sbs.size(); ++i)
    if (!positive(user_sbs.data()[i])) return false;
  for (Index i = 0; i < sbs_mbs.size(); ++i)
    if (!positive(sbs_mbs(i))) return false;
  for (Index n = 0; n < sbs_sbs.rows(); ++n)
    for (Index j = 0; j < sbs_sbs.cols(); ++j)
      if (n != j && !positive(sbs_sbs(n, j))) return false;
  return true;
}

double path_loss_mbs_user_db(double d_km) { return 128.1 + 37.6 * std::log10(d_km); }
double path_loss_sbs_user_db(double d_km) { return 140.7 + 36.7 * std::log10(d_km); }
double path_loss_mbs_sbs_db(double d_km) { return 103.4 + 24.2 * std::log10(d_km); }
double path_loss_sbs_sbs_db(double d_km) { return 103.8 + 20.9 * std::log10(d_km); }

std::vector<Eigen::Vector2d> sbs_grid_positions(int n_sbs, double region_side_m) {
  require(n_sbs >= 1, "sbs_grid_positions: n_sbs must be >= 1");
  int g = 3;
  while (g * g - 1 < n_sbs) g += 2;
  const int centre = g / 2;
  const double cell = region_side_m / g;

  struct Cell {
    int ring;
    double clockwise;  // angle walked clockwise from the top-left corner
    Eigen::Vector2d pos;
  };
  std::vector<Cell> cells;
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      const int dx = c - centre;
      const int dy = centre - r;
      if (dx == 0 && dy == 0) continue;
      const double angle = std::atan2(static_cast<double>(dy), static_cast<double>(dx));
      double cw = 0.75 * std::numbers::pi - angle;
      while (cw < 0) cw += 2 * std::numbers::pi;
      while (cw >= 2 * std::numbers::pi) cw -= 2 * std::numbers::pi;
      cells.push_back({std::max(std::abs(dx), std::abs(dy)), cw, Eigen::Vector2d(dx * cell, dy * cell)});
    }
  }
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.ring != b.ring ? a.ring < b.ring : a.clockwise < b.clockwise;
  });

  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(n_sbs));
  const auto count = static_cast<long>(cells.size());
  for (long i = 0; i < n_sbs; ++i) out.push_back(cells[static_cast<std::size_t>(i * count / n_sbs)].pos);
  return out;
}

bool respects_exclusion(const Eigen::Vector2d& user, const Topology& topo, const NetworkConfig& cfg) {
  if ((user - topo.mbs_pos).norm() < cfg.mbs_exclusion_m) return false;
  return std::all_of(topo.sbs_pos.begin(), topo.sbs_pos.end(),
                     [&](const Eigen::Vector2d& s) { return (user - s).norm() >= cfg.sbs_exclusion_m; });
}

Topology generate_topology(const NetworkConfig& cfg, Rng& rng) {
  cfg.validate();
  Topology topo;
  topo.mbs_pos = Eigen::Vector2d::Zero();
  topo.sbs_pos = sbs_grid_positions(cfg.n_sbs, cfg.region_side_m);

  const double half = cfg.region_side_m / 2;
  std::uniform_real_distribution<double> coord(-half, half);
  for (int k = 0; k < cfg.n_users_scheduled; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
      const double x = coord(rng);
      const double y = coord(rng);
      const Eigen::Vector2d p(x, y);
      if (respects_exclusion(p, topo, cfg)) {
        topo.user_pos.push_back(p);
        placed = true;
        break;
      }
    }
    if (!placed)
      throw InfeasibleGeometry("generate_topology: no admissible user position after " +
                               std::to_string(kMaxRedraws) + " draws");
  }
  return topo;
}

LargeScale compute_large_scale(const Topology& topo, const NetworkConfig& cfg, Rng& rng) {
  const int K = static_cast<int>(topo.user_pos.size());
  const int N = static_cast<int>(topo.sbs_pos.size());
  std::normal_distribution<double> std_normal(0.0, 1.0);
  auto km = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const double d = (a - b).norm() / 1000.0;
    if (!(d > 0.0)) throw InvalidArgument("compute_large_scale: coincident nodes");
    return d;
  };
  const double macro = cfg.shadow_std_macro_db;
  const double small = cfg.shadow_std_small_db;
  const double g_mbs = cfg.antenna_gain_mbs_dbi;
  const double g_sbs = cfg.antenna_gain_sbs_dbi;

  LargeScale ls;
  ls.user_mbs.resize(K);
  ls.user_sbs.resize(K, N);
  ls.sbs_mbs.resize(N);
  ls.sbs_sbs = Eigen::MatrixXd::Zero(N, N);
  for (int k = 0; k < K; ++k) {
    const auto& u = topo.user_pos[static_cast<std::size_t>(k)];
    ls.user_mbs(k) = link_gain(path_loss_mbs_user_db(km(u, topo.mbs_pos)), macro * std_normal(rng), g_mbs);
    for (int n = 0; n < N; ++n)
      ls.user_sbs(k, n) = link_gain(path_loss_sbs_user_db(km(u, topo.sbs_pos[static_cast<std::size_t>(n)])),
                                    small * std_normal(rng), g_sbs);
  }
  for (int n = 0; n < N; ++n) {
    const auto& s = topo.sbs_pos[static_cast<std::size_t>(n)];
    ls.sbs_mbs(n) = link_gain(path_loss_mbs_sbs_db(km(s, topo.mbs_pos)), macro * std_normal(rng), g_mbs);
    for (int j = 0; j < N; ++j) {
      if (j == n) continue;
      ls.sbs_sbs(n, j) = link_gain(path_loss_sbs_sbs_db(km(s, topo.sbs_pos[static_cast<std::size_t>(j)])),
                                   small * std_normal(rng), g_sbs);
    }
  }
  if (!ls.valid()) throw InvalidArgument("compute_large_scale: non-finite gain (overflow)");
  return ls;
}

}  // namespace fdsb
