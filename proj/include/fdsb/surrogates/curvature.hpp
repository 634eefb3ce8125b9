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

// Second-order information of a bound term, split into a complex-linear part
// (block diagonal over the columns of w and v) and a list of real outer
// products of complex gradients. Gradients are stored as columns of the
// stacked vector [vec(w); vec(v)].

#include "fdsb/rate_model.hpp"

#include <utility>
#include <vector>

namespace fdsb {

template <typename Real>
struct Curvature {
  using ColumnMap = Eigen::Map<CMatrix<Real>>;

  std::vector<CMatrix<Real>> w;  // per user, NL x NL Hermitian
  std::vector<CMatrix<Real>> v;  // per user, M x M Hermitian
  Index w_rows = 0;
  Index v_rows = 0;
  std::vector<Complex<Real>> outer_cols;  // column-major, stack_rows() per column
  std::vector<Real> outer_coef;

  static Curvature zeros(int n_users, Index w_rows, Index v_rows) {
    Curvature c;
    c.w.assign(static_cast<std::size_t>(n_users), CMatrix<Real>::Zero(w_rows, w_rows));
    c.v.assign(static_cast<std::size_t>(n_users), CMatrix<Real>::Zero(v_rows, v_rows));
    c.w_rows = w_rows;
    c.v_rows = v_rows;
    return c;
  }

  int n_users() const { return static_cast<int>(w.size()); }
  Index stack_rows() const { return (w_rows + v_rows) * n_users(); }
  Index n_outer() const { return static_cast<Index>(outer_coef.size()); }

  void set_zero() {
    for (auto& b : w) b.setZero();
    for (auto& b : v) b.setZero();
    outer_cols.clear();
    outer_coef.clear();
  }

  /// Appends a zero gradient with coefficient `coef` and returns views of its
  /// w and v parts (valid until the next append).
  std::pair<ColumnMap, ColumnMap> add_outer(Real coef) {
    const std::size_t at = outer_cols.size();
    outer_cols.resize(at + static_cast<std::size_t>(stack_rows()), Complex<Real>(0));
    outer_coef.push_back(coef);
    Complex<Real>* p = outer_cols.data() + at;
    return {ColumnMap(p, w_rows, n_users()), ColumnMap(p + w_rows * n_users(), v_rows, n_users())};
  }

  void add_outer(Real coef, const BeamformerSet<Real>& g) {
    auto [gw, gv] = add_outer(coef);
    gw = g.w;
    gv = g.v;
  }

  /// Stacked gradients, stack_rows() x n_outer().
  Eigen::Map<const CMatrix<Real>> outer_matrix() const {
    return Eigen::Map<const CMatrix<Real>>(outer_cols.data(), stack_rows(), n_outer());
  }

  /// v_i block += s * 2 c c^H for every user i
  template <typename Vec>
  void add_all_v(Real s, const Vec& c) {
    if (s == Real(0)) return;
    const CMatrix<Real> cc = (Real(2) * s) * (c * c.adjoint());
    for (auto& b : v) b += cc;
  }
};

}  // namespace fdsb
