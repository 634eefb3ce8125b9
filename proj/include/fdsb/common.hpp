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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace fdsb {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

using Rng = std::mt19937_64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or precondition violation on user input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling could not place a user outside the exclusion zones.
class InfeasibleGeometry : public Error {
 public:
  using Error::Error;
};

/// A surrogate left its log domain and backtracking could not recover.
class DomainTrap : public Error {
 public:
  using Error::Error;
};

/// Unrecoverable solver failure (e.g. non-finite surrogate at the expansion point).
class SolverError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

template <typename Real>
constexpr Real kLn2 = std::numbers::ln2_v<Real>;

template <typename Real>
constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();

template <typename Real>
Real abs2(const std::complex<Real>& z) {
  return std::norm(z);
}

// SplitMix64 finalizer; used to derive independent stream seeds from a master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed split: the same (master, a, b) always yields the same stream seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(a + 0x632be59bd9b4e019ULL)) ^ splitmix64(b));
}

/// i.i.d. CN(0, 1) entries.
template <typename Real>
CVector<Real> complex_normal(Index n, Rng& rng) {
  std::normal_distribution<Real> gauss(Real(0), std::sqrt(Real(0.5)));
  CVector<Real> out(n);
  for (Index i = 0; i < n; ++i) {
    const Real re = gauss(rng);
    const Real im = gauss(rng);
    out(i) = {re, im};
  }
  return out;
}

}  // namespace fdsb
