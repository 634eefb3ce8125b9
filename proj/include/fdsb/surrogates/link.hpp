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

// Scalar lower bounds on log2(1 + |z|^2 / g) for one link, where z(x) is the
// (linear) received signal amplitude and g(x) the interference-plus-noise
// power (convex quadratic). Every bound family in this library is built from
// these two primitives.
//
// SINR convexification, receiver u:
//   log2(1 + 2 Re{conj(u) z} - |u|^2 g)            tight at u = z / g
// Rate-MSE (WMMSE), receiver alpha and weight rho:
//   (ln rho - rho e + 1) / ln 2,
//   e = (|z|^2 + g)|alpha|^2 - 2 Re{conj(alpha) z} + 1
//                                              tight at alpha = z / (|z|^2 + g), rho = 1 / e

#include "fdsb/common.hpp"

namespace fdsb {

enum class SurrogateFamily { sinrc, wmmse };

inline const char* to_string(SurrogateFamily f) { return f == SurrogateFamily::sinrc ? "sinrc" : "wmmse"; }

template <typename Real>
struct LinkAux {
  Complex<Real> receiver{};  // u (SINRC) or alpha (WMMSE)
  Real weight = Real(1);     // rho (WMMSE only)
};

/// Bound value and the partial derivatives that turn into a gradient:
///   grad = (d z / d x)^H signal_coef  +  interference_coef * grad g
/// and a Hessian:
///   hess = interference_coef * hess g  +  signal_curvature * hess |z|^2
///          + outer_coef * grad grad^T
/// (the first two terms are complex-linear, the last is a real outer product).
template <typename Real>
struct LinkTerm {
  Real value;
  Complex<Real> signal_coef;
  Real interference_coef;
  Real signal_curvature = Real(0);
  Real outer_coef = Real(0);
};

template <typename Real>
LinkAux<Real> optimal_link_aux(SurrogateFamily family, Complex<Real> z, Real g) {
  if (family == SurrogateFamily::sinrc) return {z / g, Real(1)};
  const Real total = abs2(z) + g;
  const Real mse = g / total;
  return {z / total, Real(1) / mse};
}

template <typename Real>
LinkTerm<Real> link_term(SurrogateFamily family, Complex<Real> z, Real g, const LinkAux<Real>& aux) {
  const Complex<Real> r = aux.receiver;
  if (family == SurrogateFamily::sinrc) {
    const Real q = Real(1) + Real(2) * std::real(std::conj(r) * z) - abs2(r) * g;
    if (!(q > Real(0))) return {kNegInf<Real>, {}, Real(0)};
    const Real inv = Real(1) / (q * kLn2<Real>);
    return {std::log2(q), Real(2) * r * inv, -abs2(r) * inv, Real(0), -kLn2<Real>};
  }
  const Real rho = aux.weight;
  const Real e = (abs2(z) + g) * abs2(r) - Real(2) * std::real(std::conj(r) * z) + Real(1);
  const Real c = rho / kLn2<Real>;
  return {(std::log(rho) - rho * e + Real(1)) / kLn2<Real>, Real(2) * c * (r - abs2(r) * z), -c * abs2(r),
          -c * abs2(r), Real(0)};
}

/// Exact rate of the link, for reference.
template <typename Real>
Real link_rate(Complex<Real> z, Real g) {
  return std::log2(Real(1) + abs2(z) / g);
}

}  // namespace fdsb
