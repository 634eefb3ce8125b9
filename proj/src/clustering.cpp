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

#include "fdsb/clustering.hpp"

#include <numeric>

namespace fdsb {

Clustering static_clustering(const LargeScale& ls, int cluster_size) {
  const int K = static_cast<int>(ls.user_sbs.rows());
  const int N = static_cast<int>(ls.user_sbs.cols());
  require(cluster_size >= 1 && cluster_size <= N, "static_clustering: cluster size must lie in [1, N]");
  Clustering cl(K, N);
  std::vector<int> idx(static_cast<std::size_t>(N));
  for (int k = 0; k < K; ++k) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return ls.user_sbs(k, a) > ls.user_sbs(k, b); });
    for (int i = 0; i < cluster_size; ++i) cl.set(k, idx[static_cast<std::size_t>(i)], true);
  }
  return cl;
}

}  // namespace fdsb
