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

#include "fdsb/rate_model.hpp"

#include <numeric>

namespace fdsb {

Clustering::Clustering(int n_users, int n_sbs, bool value)
    : n_users_(n_users), n_sbs_(n_sbs), c_(static_cast<std::size_t>(n_users * n_sbs), value ? 1 : 0) {
  require(n_users >= 0 && n_sbs >= 0, "Clustering: negative dimensions");
  rebuild();
}

void Clustering::set(int k, int n, bool value) {
  c_[index(k, n)] = value ? 1 : 0;
  rebuild();
}

int Clustering::active_links() const { return static_cast<int>(std::count(c_.begin(), c_.end(), 1)); }

void Clustering::rebuild() {
  sbs_of_user_.assign(static_cast<std::size_t>(n_users_), {});
  users_of_sbs_.assign(static_cast<std::size_t>(n_sbs_), {});
  for (int k = 0; k < n_users_; ++k)
    for (int n = 0; n < n_sbs_; ++n)
      if (serves(k, n)) {
        sbs_of_user_[static_cast<std::size_t>(k)].push_back(n);
        users_of_sbs_[static_cast<std::size_t>(n)].push_back(k);
      }
}

DecodingOrder::DecodingOrder(std::vector<double> aggregate_gain, const Clustering& cl)
    : gain_(std::move(aggregate_gain)), n_sbs_(cl.n_sbs()) {
  const int K = static_cast<int>(gain_.size());
  require(K == cl.n_users(), "DecodingOrder: gain vector does not match the clustering");
  order_.resize(static_cast<std::size_t>(K));
  std::iota(order_.begin(), order_.end(), 0);
  // Strongest first; `weaker` is a strict total order.
  std::sort(order_.begin(), order_.end(), [this](int a, int b) { return weaker(b, a); });

  sic_sets_.assign(static_cast<std::size_t>(K * n_sbs_), {});
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < n_sbs_; ++n) {
      if (!cl.serves(k, n)) continue;
      auto& set = sic_sets_[static_cast<std::size_t>(k * n_sbs_ + n)];
      for (int i = 0; i < K; ++i)
        if (i != k && (weaker(i, k) || !cl.serves(i, n))) set.push_back(i);
    }
}

}  // namespace fdsb
