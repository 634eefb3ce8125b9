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

// Maximization of a concave composite surrogate over X_c (zero pattern plus
// one power ball per base station).
//
// An evaluator is any callable
//   BoundEvaluation<Real> eval(const BeamformerSet<Real>& x, Real smoothing, bool with_gradient)
// returning the exact value, the smoothed value and (optionally) the gradient
// of the smoothed value, with -inf marking points outside the bound's domain.
//
// Three step rules are available:
//  - barrier (default, for composite bounds exposing their terms): a
//    log-barrier Newton method on the hypograph form
//      max sum_k w_k tau_k  s.t.  tau_k <= term_{k,i}(x),  ||x_b||^2 <= P_b
//    with exact Hessians assembled from the term structure;
//  - backtracking: projected gradient ascent on the soft-min smoothed bound
//    with Barzilai-Borwein trial steps and Armijo backtracking, smoothing
//    decreased geometrically between stages. Iterates live in coordinates
//    where every power ball has unit radius.
//  - diminishing: normalized projected subgradient steps a / (b + i) on the
//    exact bound.
// All three keep the best iterate seen (on the exact value), which never falls
// below the starting value.

#include "fdsb/rate_model.hpp"
#include "fdsb/surrogates/bounds.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace fdsb {

enum class StepRule { barrier, backtracking, diminishing };

inline const char* to_string(StepRule r) {
  switch (r) {
    case StepRule::barrier: return "barrier";
    case StepRule::backtracking: return "backtracking";
    default: return "diminishing";
  }
}

struct SubsolverConfig {
  int max_inner_iters = 500;
  double tol_inner = 1e-5;
  StepRule step_rule = StepRule::barrier;
  double backtrack_shrink = 0.5;
  bool best_iterate_tracking = true;
  double step_a = 0.0;  // diminishing rule numerator; 0 selects 0.1 sqrt(P^M)
  double step_b = 10.0;
  double smoothing_initial = 1e-1;
  double smoothing_final = 1e-5;
  double barrier_growth = 20.0;  // barrier weight multiplier between centering stages
  bool record_trace = false;

  void validate() const {
    require(max_inner_iters >= 1, "SubsolverConfig: max_inner_iters must be >= 1");
    require(tol_inner > 0.0, "SubsolverConfig: tol_inner must be positive");
    require(backtrack_shrink > 0.0 && backtrack_shrink < 1.0, "SubsolverConfig: backtrack_shrink must lie in (0, 1)");
    require(step_b > 0.0 && step_a >= 0.0, "SubsolverConfig: step parameters must be positive");
    require(smoothing_final >= 0.0 && smoothing_initial >= smoothing_final,
            "SubsolverConfig: smoothing schedule must be non-increasing");
    require(barrier_growth > 1.0, "SubsolverConfig: barrier_growth must exceed 1");
  }
};

struct SubsolverTraceRow {
  int iter;
  double value;
  double step;
};

template <typename Real>
struct SubsolverResult {
  BeamformerSet<Real> x;
  Real value = Real(0);          // exact surrogate value at x
  Real initial_value = Real(0);  // exact surrogate value at x_init
  int iterations = 0;
  std::vector<SubsolverTraceRow> trace;
};

inline void write_subsolver_trace(std::ostream& os, const std::vector<SubsolverTraceRow>& trace) {
  os << "iter,surrogate_value,step\n";
  for (const auto& r : trace) os << r.iter << ',' << r.value << ',' << r.step << '\n';
}

// ---------------------------------------------------------------------------
// Budget-normalized coordinates

/// Divides every SBS block by sqrt(P^S_n) and v by sqrt(P^M) (or multiplies
/// when `inverse`).
template <typename Real>
BeamformerSet<Real> scale_by_budget(BeamformerSet<Real> x, const PowerBudgets<Real>& budgets, bool inverse) {
  for (int n = 0; n < x.n_sbs(); ++n) {
    const Real s = std::sqrt(budgets.sbs(n));
    x.sbs_block(n) *= inverse ? s : Real(1) / s;
  }
  const Real s = std::sqrt(budgets.mbs);
  x.v *= inverse ? s : Real(1) / s;
  return x;
}

/// Chain rule for the gradient: d f(D z) / dz = D grad_x.
template <typename Real>
BeamformerSet<Real> scale_gradient(BeamformerSet<Real> g, const PowerBudgets<Real>& budgets) {
  return scale_by_budget(std::move(g), budgets, true);
}

template <typename Real>
PowerBudgets<Real> unit_budgets(const PowerBudgets<Real>& budgets) {
  return PowerBudgets<Real>::uniform(static_cast<int>(budgets.sbs.size()), Real(1), Real(1));
}

/// || P(z + grad_z) - z || in budget-normalized coordinates.
template <typename Real, typename Eval>
Real gradient_mapping_norm(const Eval& eval, const BeamformerSet<Real>& x, const Clustering& cl,
                           const PowerBudgets<Real>& budgets, Real smoothing = Real(0)) {
  const auto e = eval(x, smoothing, true);
  if (!e.finite()) return std::numeric_limits<Real>::infinity();
  const auto z = scale_by_budget(x, budgets, false);
  const auto gz = scale_gradient(*e.gradient, budgets);
  return (project_feasible(z + gz, cl, unit_budgets(budgets)) - z).norm();
}

// ---------------------------------------------------------------------------

/// project_feasible(x + step g), shrinking the step while the evaluator
/// returns the sentinel. Throws DomainTrap once the step drops below 1e-18.
template <typename Real, typename Eval>
BeamformerSet<Real> subgradient_step(const Eval& eval, const BeamformerSet<Real>& x, const BeamformerSet<Real>& g,
                                     Real step, const Clustering& cl, const PowerBudgets<Real>& budgets,
                                     Real shrink = Real(0.5)) {
  if (g.squared_norm() == Real(0)) return x;
  for (;;) {
    BeamformerSet<Real> next = project_feasible(x + step * g, cl, budgets);
    if (eval(next, Real(0), false).finite()) return next;
    step *= shrink;
    if (step < Real(1e-18)) throw DomainTrap("subgradient_step: step underflow in the bound's domain");
  }
}

namespace detail {

template <typename Real, typename Eval>
SubsolverResult<Real> solve_diminishing(const Eval& eval, const BeamformerSet<Real>& x_init, Real f0,
                                        const Clustering& cl, const PowerBudgets<Real>& budgets,
                                        const SubsolverConfig& cfg) {
  SubsolverResult<Real> res{x_init, f0, f0, 0, {}};
  const Real a = cfg.step_a > 0.0 ? static_cast<Real>(cfg.step_a) : Real(0.1) * std::sqrt(budgets.mbs);
  BeamformerSet<Real> x = x_init;
  Real last_best = f0;
  int stalled = 0;
  for (int i = 0; i < cfg.max_inner_iters; ++i) {
    const auto e = eval(x, Real(0), true);
    BeamformerSet<Real> g = *e.gradient;
    const Real gn = g.norm();
    if (gn == Real(0)) break;
    g *= Real(1) / gn;
    const Real step = a / (static_cast<Real>(cfg.step_b) + static_cast<Real>(i));
    x = subgradient_step(eval, x, g, step, cl, budgets, static_cast<Real>(cfg.backtrack_shrink));
    const Real f = eval(x, Real(0), false).value;
    res.iterations = i + 1;
    if (cfg.record_trace) res.trace.push_back({i + 1, static_cast<double>(f), static_cast<double>(step)});
    if (f > res.value || !cfg.best_iterate_tracking) {
      res.value = f;
      res.x = x;
    }
    if ((res.value - last_best) <= static_cast<Real>(cfg.tol_inner) * std::max(std::abs(last_best), Real(1))) {
      if (++stalled >= 20) break;
    } else {
      stalled = 0;
    }
    last_best = res.value;
  }
  return res;
}

template <typename Real, typename Eval>
SubsolverResult<Real> solve_backtracking(const Eval& eval, const BeamformerSet<Real>& x_init, Real f0,
                                         const Clustering& cl, const PowerBudgets<Real>& budgets,
                                         const SubsolverConfig& cfg) {
  SubsolverResult<Real> res{x_init, f0, f0, 0, {}};
  const PowerBudgets<Real> unit = unit_budgets(budgets);
  const Real shrink = static_cast<Real>(cfg.backtrack_shrink);
  const Real tol = static_cast<Real>(cfg.tol_inner);
  auto eval_z = [&](const BeamformerSet<Real>& z, Real mu, bool grad) {
    auto e = eval(scale_by_budget(z, budgets, true), mu, grad);
    if (e.gradient) e.gradient = scale_gradient(*e.gradient, budgets);
    return e;
  };

  BeamformerSet<Real> z = scale_by_budget(x_init, budgets, false);
  Real mu = static_cast<Real>(cfg.smoothing_initial);
  const Real mu_final = static_cast<Real>(cfg.smoothing_final);
  int iter = 0;
  for (;;) {
    auto cur = eval_z(z, mu, true);
    Real alpha(0);
    BeamformerSet<Real> z_prev, g_prev;
    bool have_prev = false;
    int small = 0;
    while (iter < cfg.max_inner_iters) {
      const BeamformerSet<Real>& g = *cur.gradient;
      const Real gn = g.norm();
      if (!(gn > Real(0))) break;
      if (have_prev) {
        const BeamformerSet<Real> s = z - z_prev;
        const BeamformerSet<Real> y = g - g_prev;
        const Real sy = -real_inner(s, y);
        alpha = sy > Real(0) ? s.squared_norm() / sy : alpha * Real(2);
      } else {
        alpha = Real(0.1) / gn;
      }
      alpha = std::clamp(alpha, Real(1e-14) / gn, Real(1e3) / gn);

      BeamformerSet<Real> z_next;
      BoundEvaluation<Real> next;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        z_next = project_feasible(z + alpha * g, cl, unit);
        next = eval_z(z_next, mu, true);
        if (next.finite() && next.smoothed >= cur.smoothed + Real(1e-4) * real_inner(g, z_next - z)) {
          accepted = true;
          break;
        }
        alpha *= shrink;
      }
      ++iter;
      if (!accepted) break;
      const Real step = (z_next - z).norm();
      const Real gain = next.smoothed - cur.smoothed;
      z_prev = std::move(z);
      g_prev = *cur.gradient;
      have_prev = true;
      z = std::move(z_next);
      cur = std::move(next);
      if (cfg.record_trace) res.trace.push_back({iter, static_cast<double>(cur.value), static_cast<double>(step)});
      if (cur.value > res.value || !cfg.best_iterate_tracking) {
        res.value = cur.value;
        res.x = scale_by_budget(z, budgets, true);
      }
      if (gain <= tol * std::max(std::abs(cur.smoothed), Real(1)) || step < Real(1e-13)) {
        if (++small >= 2) break;
      } else {
        small = 0;
      }
    }
    if (mu <= mu_final || iter >= cfg.max_inner_iters) break;
    mu = std::max(mu * Real(0.1), mu_final);
  }
  res.iterations = iter;
  return res;
}

}  // namespace detail


/// Evaluators that expose their min-composition term by term.
template <typename Eval, typename Real>
concept TermStructured = requires(const Eval& e, const BeamformerSet<Real>& x, std::vector<Real>& out,
                                  Curvature<Real>& hess, BeamformerSet<Real>& grad) {
  e.prepare(x);
  e.term_values(0, x, e.prepare(x), out);
  e.add_term_gradient(0, std::size_t{0}, x, e.prepare(x), Real(1), grad);
  e.add_term_curvature(0, std::size_t{0}, x, e.prepare(x), Real(1), hess);
  e.weights();
  e.clustering();
};

namespace detail {

// Real coordinates of the free entries of x (zero pattern removed), with
// real and imaginary parts interleaved, followed by one epigraph variable per
// weighted active user.
template <typename Real>
class BarrierLayout {
 public:
  BarrierLayout(const BeamformerSet<Real>& shape, const Clustering& cl, const RVector<Real>& weights)
      : shape_(shape) {
    const Index L = shape.sbs_antennas;
    const Index nw = shape.w.size();
    const Index M = shape.v.rows();
    columns_.assign(static_cast<std::size_t>(2 * shape.n_users()), {});  // users without links keep empty columns
    for (int k = 0; k < shape.n_users(); ++k) {
      for (int n : cl.sbs_of_user(k))
        for (Index r = 0; r < L; ++r) add(k * shape.w.rows() + n * L + r, k, false);
      if (cl.user_active(k))
        for (Index r = 0; r < M; ++r) add(nw + k * M + r, k, true);
      if (cl.user_active(k) && weights(k) > Real(0)) users_.push_back(k);
    }
    groups_.assign(static_cast<std::size_t>(shape.n_sbs() + 1), {});
    for (std::size_t a = 0; a < complex_.size(); ++a) {
      const Index c = complex_[a];
      const int g = c >= nw ? shape.n_sbs() : static_cast<int>((c % shape.w.rows()) / L);
      groups_[static_cast<std::size_t>(g)].push_back(static_cast<Index>(a));
    }
    shape_.w.setZero();
    shape_.v.setZero();
  }

  Index n_complex() const { return static_cast<Index>(complex_.size()); }
  Index n_real() const { return 2 * n_complex(); }
  Index dim() const { return n_real() + static_cast<Index>(users_.size()); }
  const std::vector<int>& users() const { return users_; }
  /// Indices into the active list belonging to SBS n (n < N) or to the MBS (n = N).
  const std::vector<std::vector<Index>>& groups() const { return groups_; }
  /// Active entries of column k of w (false) or v (true).
  const std::vector<Index>& column(int k, bool is_v) const {
    return columns_[static_cast<std::size_t>(2 * k + (is_v ? 1 : 0))];
  }
  Index complex_index(Index a) const { return complex_[static_cast<std::size_t>(a)]; }

  RVector<Real> pack(const BeamformerSet<Real>& x) const {
    RVector<Real> y(n_real());
    for (Index a = 0; a < n_complex(); ++a) {
      const Complex<Real> c = entry(x, complex_[static_cast<std::size_t>(a)]);
      y(2 * a) = c.real();
      y(2 * a + 1) = c.imag();
    }
    return y;
  }

  BeamformerSet<Real> unpack(const RVector<Real>& y) const {
    BeamformerSet<Real> x = shape_;
    for (Index a = 0; a < n_complex(); ++a)
      entry(x, complex_[static_cast<std::size_t>(a)]) = Complex<Real>(y(2 * a), y(2 * a + 1));
    return x;
  }

  static Complex<Real>& entry(BeamformerSet<Real>& x, Index c) {
    return c < x.w.size() ? x.w.data()[c] : x.v.data()[c - x.w.size()];
  }
  static Complex<Real> entry(const BeamformerSet<Real>& x, Index c) {
    return c < x.w.size() ? x.w.data()[c] : x.v.data()[c - x.w.size()];
  }

 private:
  void add(Index c, int k, bool is_v) {
    columns_[static_cast<std::size_t>(2 * k + (is_v ? 1 : 0))].push_back(static_cast<Index>(complex_.size()));
    complex_.push_back(c);
  }

  BeamformerSet<Real> shape_;
  std::vector<Index> complex_;
  std::vector<std::vector<Index>> columns_;
  std::vector<int> users_;
  std::vector<std::vector<Index>> groups_;
};

template <typename Real, typename Eval>
class BarrierProblem {
 public:
  BarrierProblem(const Eval& eval, const BarrierLayout<Real>& layout, const PowerBudgets<Real>& budgets)
      : eval_(eval), lay_(layout), budgets_(budgets) {
    n_terms_ = 0;
    for (int k : lay_.users()) n_terms_ += 1 + static_cast<int>(eval_.clustering().sbs_of_user(k).size());
    for (const auto& g : lay_.groups()) n_terms_ += g.empty() ? 0 : 1;
  }

  int n_log_terms() const { return n_terms_; }

  Real budget(std::size_t g) const {
    return g + 1 == lay_.groups().size() ? budgets_.mbs : budgets_.sbs(static_cast<Index>(g));
  }

  /// Barrier value; -inf outside the domain. Also reports the exact bound.
  Real value(const RVector<Real>& y, Real s, Real* exact = nullptr) const {
    const Index nr = lay_.n_real();
    Real b(0);
    for (std::size_t g = 0; g < lay_.groups().size(); ++g) {
      if (lay_.groups()[g].empty()) continue;
      Real pw(0);
      for (Index a : lay_.groups()[g]) pw += y(2 * a) * y(2 * a) + y(2 * a + 1) * y(2 * a + 1);
      const Real slack = budget(g) - pw;
      if (!(slack > Real(0))) return kNegInf<Real>;
      b += std::log(slack);
    }
    const BeamformerSet<Real> x = lay_.unpack(y.head(nr));
    const auto p = eval_.prepare(x);
    Real f(0);
    for (std::size_t u = 0; u < lay_.users().size(); ++u) {
      const int k = lay_.users()[u];
      const Real tau = y(nr + static_cast<Index>(u));
      eval_.term_values(k, x, p, terms_);
      Real m = std::numeric_limits<Real>::infinity();
      for (Real t : terms_) {
        if (!(t - tau > Real(0)) || !std::isfinite(t)) return kNegInf<Real>;
        b += std::log(t - tau);
        m = std::min(m, t);
      }
      const Real wk = eval_.weights()(k);
      b += s * wk * tau;
      f += wk * m;
    }
    if (exact) *exact = f;
    return b;
  }

  /// Exact bound and the smallest term per weighted user.
  RVector<Real> minimum_terms(const RVector<Real>& y_x) const {
    const BeamformerSet<Real> x = lay_.unpack(y_x);
    const auto p = eval_.prepare(x);
    RVector<Real> out(static_cast<Index>(lay_.users().size()));
    for (std::size_t u = 0; u < lay_.users().size(); ++u) {
      eval_.term_values(lay_.users()[u], x, p, terms_);
      out(static_cast<Index>(u)) = *std::min_element(terms_.begin(), terms_.end());
    }
    return out;
  }

  /// Gradient and Hessian of the barrier at a point inside the domain.
  void derivatives(const RVector<Real>& y, Real s, RVector<Real>& grad, RMatrix<Real>& hess) const {
    const Index nr = lay_.n_real();
    const Index dim = lay_.dim();
    grad = RVector<Real>::Zero(dim);
    hess = RMatrix<Real>::Zero(dim, dim);
    const BeamformerSet<Real> x = lay_.unpack(y.head(nr));
    const auto p = eval_.prepare(x);
    const int K = x.n_users();
    Curvature<Real> curv = Curvature<Real>::zeros(K, x.w.rows(), x.v.rows());
    BeamformerSet<Real> gsum = BeamformerSet<Real>::zeros(K, x.n_sbs(), x.sbs_antennas, x.v.rows());
    BeamformerSet<Real> gt = gsum;

    for (std::size_t u = 0; u < lay_.users().size(); ++u) {
      const int k = lay_.users()[u];
      const Index tu = nr + static_cast<Index>(u);
      eval_.term_values(k, x, p, terms_);
      grad(tu) += s * eval_.weights()(k);
      for (std::size_t i = 0; i < terms_.size(); ++i) {
        const Real inv = Real(1) / (terms_[i] - y(tu));
        gt.w.setZero();
        gt.v.setZero();
        eval_.add_term_gradient(k, i, x, p, Real(1), gt);
        gsum.w += inv * gt.w;
        gsum.v += inv * gt.v;
        grad(tu) -= inv;
        eval_.add_term_curvature(k, i, x, p, inv, curv);
        const RVector<Real> g = lay_.pack(gt);
        const Real inv2 = inv * inv;
        hess.topLeftCorner(nr, nr).noalias() -= inv2 * g * g.transpose();
        hess.block(0, tu, nr, 1) += inv2 * g;
        hess.block(tu, 0, 1, nr) += inv2 * g.transpose();
        hess(tu, tu) -= inv2;
      }
    }
    grad.head(nr) += lay_.pack(gsum);
    if (curv.n_outer() > 0) {
      const auto f = curv.outer_matrix();
      outer_.resize(nr, curv.n_outer());
      for (Index a = 0; a < lay_.n_complex(); ++a) {
        outer_.row(2 * a) = f.row(lay_.complex_index(a)).real();
        outer_.row(2 * a + 1) = f.row(lay_.complex_index(a)).imag();
      }
      const Eigen::Map<const RVector<Real>> coef(curv.outer_coef.data(), curv.n_outer());
      hess.topLeftCorner(nr, nr).noalias() += outer_ * coef.asDiagonal() * outer_.transpose();
    }
    // complex-linear blocks
    for (int k = 0; k < K; ++k) {
      embed(hess, curv.w[static_cast<std::size_t>(k)], lay_.column(k, false), k * x.w.rows());
      embed(hess, curv.v[static_cast<std::size_t>(k)], lay_.column(k, true), x.w.size() + k * x.v.rows());
    }
    // power budgets
    for (std::size_t g = 0; g < lay_.groups().size(); ++g) {
      const auto& idx = lay_.groups()[g];
      if (idx.empty()) continue;
      Real pw(0);
      for (Index a : idx) pw += y(2 * a) * y(2 * a) + y(2 * a + 1) * y(2 * a + 1);
      const Real slack = budget(g) - pw;
      RVector<Real> xb(2 * static_cast<Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) {
        xb(2 * j) = y(2 * idx[j]);
        xb(2 * j + 1) = y(2 * idx[j] + 1);
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (int ri = 0; ri < 2; ++ri) {
          const Index r = 2 * idx[i] + ri;
          grad(r) -= Real(2) * y(r) / slack;
          hess(r, r) -= Real(2) / slack;
          for (std::size_t j = 0; j < idx.size(); ++j)
            for (int rj = 0; rj < 2; ++rj)
              hess(r, 2 * idx[j] + rj) -= Real(4) * xb(2 * i + ri) * xb(2 * j + rj) / (slack * slack);
        }
      }
    }
  }

 private:
  // Adds the real embedding of the complex-linear operator `blk` acting on a
  // column whose free entries are `cols` (stacked offset `base`).
  void embed(RMatrix<Real>& hess, const CMatrix<Real>& blk, const std::vector<Index>& cols, Index base) const {
    for (Index a : cols) {
      const Index ra = lay_.complex_index(a) - base;
      for (Index b : cols) {
        const Complex<Real> h = blk(ra, lay_.complex_index(b) - base);
        hess(2 * a, 2 * b) += h.real();
        hess(2 * a, 2 * b + 1) -= h.imag();
        hess(2 * a + 1, 2 * b) += h.imag();
        hess(2 * a + 1, 2 * b + 1) += h.real();
      }
    }
  }

  const Eval& eval_;
  const BarrierLayout<Real>& lay_;
  const PowerBudgets<Real>& budgets_;
  int n_terms_ = 0;
  mutable std::vector<Real> terms_;
  mutable RMatrix<Real> outer_;  // workspace for the packed outer-product factors
};

/// Newton direction for the concave barrier: solves (-H) d = g with Jacobi
/// equilibration and diagonal regularization when the factorization fails.
template <typename Real>
RVector<Real> newton_direction(const RMatrix<Real>& hess, const RVector<Real>& grad) {
  const Index n = grad.size();
  RMatrix<Real> a = -hess;
  RVector<Real> d = a.diagonal().cwiseMax(Real(0)).cwiseSqrt();
  const Real dmax = d.size() ? d.maxCoeff() : Real(1);
  for (Index i = 0; i < n; ++i)
    if (!(d(i) > dmax * Real(1e-150))) d(i) = dmax > Real(0) ? dmax : Real(1);
  const RVector<Real> inv = d.cwiseInverse();
  a = inv.asDiagonal() * a * inv.asDiagonal();
  const RVector<Real> b = inv.cwiseProduct(grad);
  Real reg(0);
  for (int attempt = 0; attempt < 30; ++attempt) {
    RMatrix<Real> m = a;
    if (reg > Real(0)) m.diagonal().array() += reg;
    Eigen::LLT<RMatrix<Real>> llt(m);
    if (llt.info() == Eigen::Success) {
      RVector<Real> z = llt.solve(b);
      if (z.allFinite()) return inv.cwiseProduct(z);
    }
    reg = reg > Real(0) ? reg * Real(10) : Real(1e-12);
  }
  return inv.cwiseProduct(b) * Real(1e-3);
}

// Strictly interior copy of x_init: blocks at or beyond their budget are
// pulled inside by a relative margin. Empty when no margin keeps every term
// finite (the point sits on the edge of the bound's domain).
template <typename Real, typename Eval>
std::optional<RVector<Real>> interior_start(const BarrierProblem<Real, Eval>& prob, const BarrierLayout<Real>& lay,
                                            const BeamformerSet<Real>& x_init) {
  for (const Real margin : {Real(1e-6), Real(1e-9), Real(1e-12)}) {
    RVector<Real> y(lay.dim());
    y.head(lay.n_real()) = lay.pack(x_init);
    for (std::size_t g = 0; g < lay.groups().size(); ++g) {
      const auto& idx = lay.groups()[g];
      Real pw(0);
      for (Index a : idx) pw += y(2 * a) * y(2 * a) + y(2 * a + 1) * y(2 * a + 1);
      const Real cap = prob.budget(g) * (Real(1) - margin);
      if (idx.empty() || pw <= cap) continue;
      const Real sc = std::sqrt(cap / pw);
      for (Index a : idx) {
        y(2 * a) *= sc;
        y(2 * a + 1) *= sc;
      }
    }
    const RVector<Real> mins = prob.minimum_terms(y.head(lay.n_real()));
    if (!mins.allFinite()) continue;
    y.tail(mins.size()) = mins.array() - Real(1);
    return y;
  }
  return std::nullopt;
}

/// Empty when no strictly interior start exists near x_init.
template <typename Real, typename Eval>
std::optional<SubsolverResult<Real>> solve_barrier(const Eval& eval, const BeamformerSet<Real>& x_init, Real f0,
                                                   const PowerBudgets<Real>& budgets, const SubsolverConfig& cfg) {
  SubsolverResult<Real> res{x_init, f0, f0, 0, {}};
  const BarrierLayout<Real> lay(x_init, eval.clustering(), eval.weights());
  if (lay.users().empty() || lay.n_complex() == 0) return res;
  const BarrierProblem<Real, Eval> prob(eval, lay, budgets);
  const Index nr = lay.n_real();
  std::optional<RVector<Real>> start = interior_start(prob, lay, x_init);
  if (!start) return std::nullopt;
  RVector<Real> y = std::move(*start);

  const Real m = static_cast<Real>(prob.n_log_terms());
  const Real scale = std::max(std::abs(f0), Real(1));
  // first stage targets a gap of 10% of |f0|: the start is already a good point
  Real s = Real(10) * m / scale;
  const Real gap_target = static_cast<Real>(cfg.tol_inner) * Real(1e-2) * scale;
  const Real growth = static_cast<Real>(cfg.barrier_growth);

  RVector<Real> grad;
  RMatrix<Real> hess;
  int iter = 0;
  Real exact(0);
  Real bval = prob.value(y, s, &exact);
  if (!(bval > kNegInf<Real>)) return std::nullopt;
  while (iter < cfg.max_inner_iters) {
    // centering
    for (;;) {
      if (iter >= cfg.max_inner_iters) break;
      prob.derivatives(y, s, grad, hess);
      const RVector<Real> d = newton_direction(hess, grad);
      const Real decrement = grad.dot(d);
      ++iter;
      if (!(decrement > Real(1e-12))) break;
      Real alpha(1);
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        const RVector<Real> y_try = y + alpha * d;
        Real ex(0);
        const Real bt_val = prob.value(y_try, s, &ex);
        if (bt_val > kNegInf<Real> && bt_val >= bval + Real(0.25) * alpha * decrement) {
          y = y_try;
          bval = bt_val;
          exact = ex;
          moved = true;
          break;
        }
        alpha *= Real(0.5);
      }
      if (cfg.record_trace) res.trace.push_back({iter, static_cast<double>(exact), static_cast<double>(alpha)});
      if (moved && exact > res.value) {
        res.value = exact;
        res.x = lay.unpack(y.head(nr));
      }
      // stage done: Newton decrement small, or steps limited by roundoff in the barrier value
      if (!moved || decrement < Real(2e-9) || alpha < Real(1e-3)) break;
    }
    if (m / s <= gap_target) break;
    s *= growth;
    bval = prob.value(y, s, &exact);
  }
  res.iterations = iter;
  return res;
}

}  // namespace detail

/// Maximizes the bound over X_c starting from the feasible point x_init.
/// Throws SolverError when the bound is not finite at x_init.
template <typename Real, typename Eval>
SubsolverResult<Real> solve_subproblem(const Eval& eval, const BeamformerSet<Real>& x_init, const Clustering& cl,
                                       const PowerBudgets<Real>& budgets, const SubsolverConfig& cfg) {
  cfg.validate();
  const Real f0 = eval(x_init, Real(0), false).value;
  if (!(f0 > kNegInf<Real>) || !std::isfinite(f0))
    throw SolverError("solve_subproblem: bound is not finite at the starting point");
  SubsolverResult<Real> res;
  if (cfg.step_rule == StepRule::diminishing) {
    res = detail::solve_diminishing(eval, x_init, f0, cl, budgets, cfg);
  } else if (cfg.step_rule == StepRule::barrier) {
    std::optional<SubsolverResult<Real>> r;
    if constexpr (TermStructured<Eval, Real>) r = detail::solve_barrier(eval, x_init, f0, budgets, cfg);
    res = r ? std::move(*r) : detail::solve_backtracking(eval, x_init, f0, cl, budgets, cfg);
  } else {
    res = detail::solve_backtracking(eval, x_init, f0, cl, budgets, cfg);
  }
  // Undo rounding from the coordinate change.
  res.x = project_feasible(std::move(res.x), cl, budgets);
  res.value = std::max(eval(res.x, Real(0), false).value, kNegInf<Real>);
  if (res.value < f0) {
    res.x = x_init;
    res.value = f0;
  }
  return res;
}

namespace detail {

/// min 0.5 phi' Q phi  s.t.  E phi = 1, phi >= 0 (primal active set). The
/// start puts each block's mass uniformly in theta = phi / scale and the
/// remaining variables at zero.
template <typename Real>
RVector<Real> active_set_qp(const RMatrix<Real>& q, const RMatrix<Real>& e, const RVector<Real>& scale, Index n_lambda,
                            const std::vector<std::pair<Index, Index>>& blocks) {
  const Index dim = q.rows();
  const Index m = e.rows();
  RVector<Real> phi = RVector<Real>::Zero(dim);
  std::vector<bool> fixed(static_cast<std::size_t>(dim), false);
  for (const auto& [b, end] : blocks)
    for (Index i = b; i < end; ++i) phi(i) = scale(i) / static_cast<Real>(end - b);
  for (Index i = n_lambda; i < dim; ++i) fixed[static_cast<std::size_t>(i)] = true;
  constexpr Real kTol = Real(1e-12);
  for (int iter = 0; iter < 50 * static_cast<int>(dim) + 50; ++iter) {
    std::vector<Index> free;
    for (Index i = 0; i < dim; ++i)
      if (!fixed[static_cast<std::size_t>(i)]) free.push_back(i);
    const auto nf = static_cast<Index>(free.size());
    RMatrix<Real> kkt = RMatrix<Real>::Zero(nf + m, nf + m);
    RVector<Real> rhs = RVector<Real>::Zero(nf + m);
    for (Index a = 0; a < nf; ++a) {
      for (Index b = 0; b < nf; ++b) kkt(a, b) = q(free[a], free[b]);
      for (Index r = 0; r < m; ++r) kkt(nf + r, a) = kkt(a, nf + r) = e(r, free[a]);
    }
    rhs.tail(m).setOnes();
    const RVector<Real> sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    RVector<Real> target = RVector<Real>::Zero(dim);
    for (Index a = 0; a < nf; ++a) target(free[a]) = sol(a);
    const RVector<Real> step = target - phi;
    if (step.norm() <= kTol * (Real(1) + phi.norm())) {
      // Release the fixed variable with the most negative multiplier.
      const RVector<Real> zeta = q * phi + e.transpose() * sol.tail(m);
      Index worst = -1;
      Real most = -kTol;
      for (Index i = 0; i < dim; ++i)
        if (fixed[static_cast<std::size_t>(i)] && zeta(i) < most) {
          most = zeta(i);
          worst = i;
        }
      if (worst < 0) break;
      fixed[static_cast<std::size_t>(worst)] = false;
      continue;
    }
    Real alpha(1);
    Index blocking = -1;
    for (Index i = 0; i < dim; ++i)
      if (step(i) < Real(0) && -phi(i) / step(i) < alpha) {
        alpha = -phi(i) / step(i);
        blocking = i;
      }
    phi += alpha * step;
    if (blocking >= 0) {
      phi(blocking) = Real(0);
      fixed[static_cast<std::size_t>(blocking)] = true;
    }
  }
  return phi.cwiseMax(Real(0));
}

}  // namespace detail

/// Stationarity witness for min-composed bounds over X_c. Terms within
/// `active_gap` of their user's min count as active; the residual is the
/// gradient-mapping norm (budget-normalized coordinates) at the combination
/// of active term gradients that best matches the outward normals of the
/// saturated power constraints. Zero at a stationary point of the bound,
/// including points where several terms tie, which the single-term
/// subgradient of gradient_mapping_norm cannot certify.
template <typename Real, typename Eval>
  requires TermStructured<Eval, Real>
Real stationarity_residual(const Eval& eval, const BeamformerSet<Real>& x, const PowerBudgets<Real>& budgets,
                           Real active_gap = Real(1e-2)) {
  const Clustering& cl = eval.clustering();
  const auto p = eval.prepare(x);
  const BeamformerSet<Real> z = scale_by_budget(x, budgets, false);
  auto zeros = [&] { return BeamformerSet<Real>::zeros(x.n_users(), x.n_sbs(), x.sbs_antennas, x.v.rows()); };

  // Columns: weighted term gradients (one simplex per user), then -z_b for
  // every saturated power group (nonnegative multipliers).
  std::vector<BeamformerSet<Real>> cols;
  std::vector<std::pair<Index, Index>> simplices;
  std::vector<Real> terms;
  for (int k = 0; k < x.n_users(); ++k) {
    const Real wk = eval.weights()(k);
    if (!cl.user_active(k) || wk == Real(0)) continue;
    eval.term_values(k, x, p, terms);
    const Real m = *std::min_element(terms.begin(), terms.end());
    if (m == kNegInf<Real>) return std::numeric_limits<Real>::infinity();
    const auto begin = static_cast<Index>(cols.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (terms[i] > m + active_gap) continue;
      BeamformerSet<Real> g = zeros();
      eval.add_term_gradient(k, i, x, p, wk, g);
      apply_zero_pattern(g, cl);
      cols.push_back(scale_gradient(std::move(g), budgets));
    }
    simplices.emplace_back(begin, static_cast<Index>(cols.size()));
  }
  const auto n_lambda = static_cast<Index>(cols.size());
  if (n_lambda == 0) return Real(0);
  constexpr Real kSaturated = Real(1) - Real(1e-4);  // interior-point solutions stop short of the boundary
  for (int n = 0; n < x.n_sbs(); ++n)
    if (z.sbs_block(n).squaredNorm() >= kSaturated) {
      BeamformerSet<Real> c = zeros();
      c.sbs_block(n) = -z.sbs_block(n);
      cols.push_back(std::move(c));
    }
  if (z.v.squaredNorm() >= kSaturated) {
    BeamformerSet<Real> c = zeros();
    c.v = -z.v;
    cols.push_back(std::move(c));
  }

  // min 0.5 |sum theta_i c_i|^2 over the simplices and theta_mu >= 0. Column
  // norms span many orders of magnitude (a starved user's backhaul gradient
  // is huge), so the QP is solved exactly by a primal active-set method in
  // column-normalized variables phi_i = |c_i| theta_i.
  const auto dim = static_cast<Index>(cols.size());
  RVector<Real> scale(dim);
  for (Index i = 0; i < dim; ++i) scale(i) = std::max(cols[static_cast<std::size_t>(i)].norm(), Real(1e-300));
  RMatrix<Real> q(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j <= i; ++j)
      q(i, j) = q(j, i) = real_inner(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]) /
                          (scale(i) * scale(j));
  const auto n_blocks = static_cast<Index>(simplices.size());
  RMatrix<Real> e = RMatrix<Real>::Zero(n_blocks, dim);  // sum_i phi_i / |c_i| = 1 per user
  for (Index b = 0; b < n_blocks; ++b)
    for (Index i = simplices[static_cast<std::size_t>(b)].first; i < simplices[static_cast<std::size_t>(b)].second; ++i)
      e(b, i) = Real(1) / scale(i);
  const RVector<Real> theta = detail::active_set_qp(q, e, scale, n_lambda, simplices).cwiseQuotient(scale);

  BeamformerSet<Real> g = zeros();
  for (Index i = 0; i < n_lambda; ++i) g += theta(i) * cols[static_cast<std::size_t>(i)];
  return (project_feasible(z + g, cl, unit_budgets(budgets)) - z).norm();
}

}  // namespace fdsb
