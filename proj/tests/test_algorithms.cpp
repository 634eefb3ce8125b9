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

#include "support.hpp"

#include <doctest.h>

#include <chrono>

using namespace fdsb;
using testing::Instance;

namespace {

constexpr SurrogateFamily kFamilies[] = {SurrogateFamily::sinrc, SurrogateFamily::wmmse};

SlbmConfig slbm_config(SurrogateFamily fam) {
  SlbmConfig c;
  c.surrogate_family = fam;
  return c;
}

}  // namespace

TEST_CASE("SLBM is a monotone minorize-maximize sequence") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Instance in(testing::desk_config(seed));
    if (seed % 2 == 0) in.set_clustering(static_clustering(in.ch.large_scale, 2));
    for (SurrogateFamily fam : kFamilies) {
      const RunTrace<double> tr =
          slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, slbm_config(fam), SubsolverConfig{}, std::nullopt, seed);
      REQUIRE(tr.rows.size() == static_cast<std::size_t>(tr.outer_iterations + 1));
      for (std::size_t t = 1; t < tr.rows.size(); ++t) {
        const double tol = 1e-9 * std::abs(tr.rows[t].objective);
        // surrogate tight at x^{t-1}, the subsolver never descends, the bound is below the objective
        CHECK(tr.rows[t].surrogate >= tr.rows[t - 1].objective - tol);
        CHECK(tr.rows[t].objective >= tr.rows[t].surrogate - tol);
        CHECK(tr.rows[t].iteration == static_cast<int>(t));
      }
      CHECK(is_feasible(tr.x, in.cl, in.budgets));
      CHECK(tr.objective == in.objective(tr.x));
      CHECK(tr.metric == tr.objective);
      CHECK(tr.rates.weighted_sum == doctest::Approx(tr.objective).epsilon(1e-12));
      CHECK(tr.converged == (tr.outer_iterations < SlbmConfig{}.max_outer_iters ||
                             tr.rows.back().objective - tr.rows[tr.rows.size() - 2].objective <=
                                 1e-3 * std::abs(tr.rows[tr.rows.size() - 2].objective)));
      CHECK(tr.objective > 0.0);
    }
  }
}

TEST_CASE("SLBM starting points") {
  Instance in(testing::desk_config(7));
  const SlbmConfig cfg = slbm_config(SurrogateFamily::sinrc);
  const auto seeded = slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, cfg, SubsolverConfig{}, std::nullopt, 11);
  const auto again = slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, cfg, SubsolverConfig{}, std::nullopt, 11);
  CHECK(seeded.objective == again.objective);
  CHECK((seeded.x.w - again.x.w).norm() == 0.0);

  // x0 = 0 has zero objective with active links and restarts from the seeded draw.
  const auto zero = slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, cfg, SubsolverConfig{},
                         BeamformerSet<double>::zeros_like(in.ch), 11);
  CHECK(zero.rows.front().objective > 0.0);
  CHECK(zero.objective == seeded.objective);

  // A feasible x0 is used as given.
  Rng rng(7);
  const auto x0 = testing::random_feasible(in, rng);
  const auto warm = slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, cfg, SubsolverConfig{}, x0, 11);
  CHECK(warm.rows.front().objective == in.objective(x0));

  // An infeasible x0 is projected first.
  const auto big = slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, cfg, SubsolverConfig{}, 10.0 * x0, 11);
  CHECK(big.rows.front().objective == doctest::Approx(in.objective(project_feasible(10.0 * x0, in.cl, in.budgets))));

  // initial_point spends half of every budget.
  Rng r2(3);
  const auto ip = initial_point(in.ch, in.cl, in.budgets, r2);
  for (int n = 0; n < ip.n_sbs(); ++n)
    CHECK(ip.sbs_block(n).squaredNorm() == doctest::Approx(0.5 * in.budgets.sbs(n)).epsilon(1e-12));
  CHECK(ip.v.squaredNorm() == doctest::Approx(0.5 * in.budgets.mbs).epsilon(1e-12));
}

TEST_CASE("SLBM configuration checks") {
  Instance in(testing::desk_config(8));
  SlbmConfig bad;
  bad.max_outer_iters = 0;
  CHECK_THROWS_AS(slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, bad, SubsolverConfig{}), InvalidArgument);
  bad = SlbmConfig{};
  bad.rel_tol = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("static clustering keeps the C strongest SBSs per user") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Instance in(testing::desk_config(seed));
    for (int c = 1; c <= 4; ++c) {
      const Clustering cl = static_clustering(in.ch.large_scale, c);
      for (int k = 0; k < 2; ++k) {
        REQUIRE(cl.sbs_of_user(k).size() == static_cast<std::size_t>(c));
        double weakest_in = 1e300, strongest_out = 0.0;
        for (int n = 0; n < 4; ++n) {
          const double g = in.ch.large_scale.user_sbs(k, n);
          if (cl.serves(k, n))
            weakest_in = std::min(weakest_in, g);
          else
            strongest_out = std::max(strongest_out, g);
        }
        CHECK(weakest_in >= strongest_out);
      }
    }
    CHECK_THROWS_AS(static_clustering(in.ch.large_scale, 0), InvalidArgument);
    CHECK_THROWS_AS(static_clustering(in.ch.large_scale, 5), InvalidArgument);
  }
}

TEST_CASE("link-removal heuristic") {
  Instance in(testing::desk_config(9));
  for (int jd : {1, 3}) {
    ClusteringConfig cc;
    cc.j_delta = jd;
    const auto h = heuristic_clustering(in.ch, in.ord, in.weights, in.budgets, slbm_config(SurrogateFamily::sinrc),
                                        SubsolverConfig{}, cc, 5);
    const int links = 2 * 4;
    const std::size_t rounds = static_cast<std::size_t>((links + jd - 1) / jd + 1);
    REQUIRE(h.objectives.size() == rounds);
    REQUIRE(h.candidates.size() == rounds);
    CHECK(h.candidates.front() == Clustering::full(2, 4));
    CHECK_FALSE(h.candidates.back().any());
    CHECK(h.objectives.back() == 0.0);
    for (std::size_t r = 1; r < rounds; ++r) {
      int removed = 0;
      for (int k = 0; k < 2; ++k)
        for (int n = 0; n < 4; ++n) {
          CHECK_FALSE((h.candidates[r].serves(k, n) && !h.candidates[r - 1].serves(k, n)));
          removed += h.candidates[r - 1].serves(k, n) && !h.candidates[r].serves(k, n);
        }
      CHECK(removed == std::min(jd, links - static_cast<int>(jd * (r - 1))));
    }
    const auto best = std::max_element(h.objectives.begin(), h.objectives.end());
    CHECK(h.trace.objective == *best);
    CHECK(h.clustering == h.candidates[static_cast<std::size_t>(best - h.objectives.begin())]);
    CHECK(h.trace.objective >= h.objectives.front());
    CHECK(is_feasible(h.trace.x, h.clustering, in.budgets));
  }
  ClusteringConfig bad;
  bad.j_delta = 9;
  CHECK_THROWS_AS(heuristic_clustering(in.ch, in.ord, in.weights, in.budgets, SlbmConfig{}, SubsolverConfig{}, bad),
                  InvalidArgument);
}

TEST_CASE("partial-CSI methods reduce to full-CSI SLBM under full cooperation") {
  Instance in(testing::desk_config(10));
  const ChannelSet<double> known = partial_csi_view(in.ch, in.cl);
  const DecodingOrder ord = partial_decoding_order(known, in.cl);
  const std::uint64_t seed = 77;
  const SlbmConfig cfg = slbm_config(SurrogateFamily::sinrc);
  const auto full = slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, cfg, SubsolverConfig{}, std::nullopt,
                         derive_seed(seed, 0, 0));
  const auto dlb = dlb_slbm(known, in.cl, ord, in.weights, in.budgets, cfg, SubsolverConfig{}, 20, seed);
  const auto saa = saa_slbm(known, in.cl, ord, in.weights, in.budgets, 5, cfg, SubsolverConfig{}, 20, seed);
  CHECK(dlb.metric == doctest::Approx(full.objective).epsilon(1e-9));
  CHECK(saa.metric == doctest::Approx(full.objective).epsilon(1e-9));
  StochConfig sc;
  sc.max_iters = 10;
  sc.eval_sample_count = 20;
  const auto st = stochastic_slbm(known, in.cl, ord, in.weights, in.budgets, sc, SubsolverConfig{}, seed);
  CHECK(st.metric == doctest::Approx(full.objective).epsilon(0.02));
}

TEST_CASE("partial-CSI runs under a fixed cluster size") {
  Instance in(testing::desk_config(11));
  in.set_clustering(static_clustering(in.ch.large_scale, 2));
  const ChannelSet<double> known = partial_csi_view(in.ch, in.cl);
  const DecodingOrder ord = partial_decoding_order(known, in.cl);
  for (SurrogateFamily fam : kFamilies) {
    StochConfig sc;
    sc.max_iters = 15;
    sc.eval_sample_count = 50;
    sc.surrogate_family = fam;
    const auto st = stochastic_slbm(known, in.cl, ord, in.weights, in.budgets, sc, SubsolverConfig{}, 3);
    CHECK(st.rows.size() == 16);
    CHECK(st.outer_iterations == 15);
    CHECK(is_feasible(st.x, in.cl, in.budgets));
    CHECK(st.metric == doctest::Approx(st.rates.weighted_sum).epsilon(1e-12));
    CHECK(st.metric > 0.0);
    const auto again = stochastic_slbm(known, in.cl, ord, in.weights, in.budgets, sc, SubsolverConfig{}, 3);
    CHECK(again.metric == st.metric);

    sc.init = StochInit::random;
    const auto rnd = stochastic_slbm(known, in.cl, ord, in.weights, in.budgets, sc, SubsolverConfig{}, 3);
    CHECK(is_feasible(rnd.x, in.cl, in.budgets));

    const SlbmConfig cfg = slbm_config(fam);
    const auto dlb = dlb_slbm(known, in.cl, ord, in.weights, in.budgets, cfg, SubsolverConfig{}, 50, 3);
    const auto saa = saa_slbm(known, in.cl, ord, in.weights, in.budgets, 10, cfg, SubsolverConfig{}, 50, 3);
    for (const auto* tr : {&dlb, &saa}) {
      CHECK(is_feasible(tr->x, in.cl, in.budgets));
      CHECK(tr->metric == doctest::Approx(tr->rates.weighted_sum).epsilon(1e-12));
      for (std::size_t t = 1; t < tr->rows.size(); ++t)
        CHECK(tr->rows[t].objective >= tr->rows[t - 1].objective - 1e-9 * std::abs(tr->rows[t].objective));
    }
    // The stochastic run starts from the deterministic-bound solution.
    Rng eval_rng(derive_seed(3, 2, 0));
    const auto eval_set = draw_ensemble(known, 50, eval_rng);
    CHECK(st.rows.front().objective ==
          doctest::Approx(partial_csi_objective(dlb_slbm(known, in.cl, ord, in.weights, in.budgets, cfg,
                                                         SubsolverConfig{}, 1, 3).x,
                                                known, in.cl, ord, in.weights, eval_set)));
  }
  CHECK_THROWS_AS(saa_slbm(known, in.cl, ord, in.weights, in.budgets, 0, SlbmConfig{}, SubsolverConfig{}, 10, 1),
                  InvalidArgument);
  StochConfig bad;
  bad.max_iters = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("SLBM stops near a stationary point of its last surrogate") {
  // The default rel_tol of 1e-3 stops while the objective still creeps up;
  // the witness is checked at a tight tolerance.
  int witnessed = 0;
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    Instance in(testing::desk_config(seed));
    for (SurrogateFamily fam : kFamilies) {
      SlbmConfig cfg = slbm_config(fam);
      cfg.max_outer_iters = 1000;
      cfg.rel_tol = 1e-7;
      const auto tr = slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, cfg, SubsolverConfig{}, std::nullopt, seed);
      if (!tr.converged) continue;
      const auto bound = network_bound_at(fam, tr.x, in.ch, in.cl, in.ord, in.weights);
      const double residual = stationarity_residual(bound, tr.x, in.budgets);
      CHECK(residual <= 1e-2 * (1.0 + tr.x.norm()));
      ++witnessed;
    }
  }
  CHECK(witnessed >= 10);
}

TEST_CASE("stationarity residual separates a fresh start from a converged point") {
  Instance in(testing::desk_config(20));
  SlbmConfig one = slbm_config(SurrogateFamily::sinrc);
  one.max_outer_iters = 1;
  const auto x1 = slbm(in.ch, in.cl, in.ord, in.weights, in.budgets, one, SubsolverConfig{}, std::nullopt, 20).x;
  const auto at1 = network_bound_at(SurrogateFamily::sinrc, x1, in.ch, in.cl, in.ord, in.weights);
  CHECK(stationarity_residual(at1, x1, in.budgets) > 0.1);
}

TEST_CASE("heuristic with j_delta = K N evaluates full and empty clusterings only") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Instance in(testing::desk_config(seed));
    ClusteringConfig cc;
    cc.j_delta = 8;
    const auto h = heuristic_clustering(in.ch, in.ord, in.weights, in.budgets, SlbmConfig{}, SubsolverConfig{}, cc, 1);
    REQUIRE(h.objectives.size() == 2);
    CHECK(h.clustering == Clustering::full(2, 4));
    CHECK(h.objectives[0] > 0.0);
  }
  Instance in(testing::desk_config(1));
  CHECK(static_clustering(in.ch.large_scale, 4) == Clustering::full(2, 4));
}

TEST_CASE("SAA with one sample is SLBM on the completed channel") {
  Instance in(testing::desk_config(12));
  in.set_clustering(static_clustering(in.ch.large_scale, 2));
  const ChannelSet<double> known = partial_csi_view(in.ch, in.cl);
  const DecodingOrder ord = partial_decoding_order(known, in.cl);
  const std::uint64_t seed = 5;
  const SlbmConfig cfg = slbm_config(SurrogateFamily::sinrc);
  const auto saa = saa_slbm(known, in.cl, ord, in.weights, in.budgets, 1, cfg, SubsolverConfig{}, 10, seed);

  Rng saa_rng(derive_seed(seed, 3, 0));
  const AccessEnsemble<double> one = draw_ensemble(known, 1, saa_rng);
  ChannelSet<double> completed = known;
  for (int k = 0; k < 2; ++k) completed.user_sbs.col(k) = one.users[static_cast<std::size_t>(k)].col(0);
  const auto ref = slbm(completed, in.cl, ord, in.weights, in.budgets, cfg, SubsolverConfig{}, std::nullopt,
                        derive_seed(seed, 0, 0));
  CHECK(saa.objective == doctest::Approx(ref.objective).epsilon(1e-9));
  CHECK(saa.outer_iterations == ref.outer_iterations);
}

TEST_CASE("SAA estimate approaches the Monte Carlo expectation as samples grow") {
  Instance in(testing::desk_config(13));
  in.set_clustering(static_clustering(in.ch.large_scale, 2));
  const ChannelSet<double> known = partial_csi_view(in.ch, in.cl);
  const DecodingOrder ord = partial_decoding_order(known, in.cl);
  Rng rng(13);
  const auto x = testing::random_feasible(in, rng);
  Rng big(derive_seed(13, 9, 0));
  const double truth = partial_csi_objective(x, known, in.cl, ord, in.weights, draw_ensemble(known, 20000, big));
  double gap10 = 0.0, gap200 = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    gap10 += std::abs(partial_csi_objective(x, known, in.cl, ord, in.weights, draw_ensemble(known, 10, rng)) - truth);
    gap200 += std::abs(partial_csi_objective(x, known, in.cl, ord, in.weights, draw_ensemble(known, 200, rng)) - truth);
  }
  CHECK(gap200 < gap10);
}

TEST_CASE("deterministic-bound SLBM: Jensen direction and cost") {
  for (std::uint64_t seed = 14; seed < 17; ++seed) {
    Instance in(testing::desk_config(seed));
    in.set_clustering(static_clustering(in.ch.large_scale, 2));
    const ChannelSet<double> known = partial_csi_view(in.ch, in.cl);
    const DecodingOrder ord = partial_decoding_order(known, in.cl);
    const auto t0 = std::chrono::steady_clock::now();
    const auto dlb = dlb_slbm(known, in.cl, ord, in.weights, in.budgets, SlbmConfig{}, SubsolverConfig{}, 2000, seed);
    const auto t1 = std::chrono::steady_clock::now();
    // The Jensen objective of its own solution sits below the sampled average.
    CHECK(dlb.objective <= dlb.metric + 0.05);
    const JensenMatrix<double> jm = jensen_matrix(known, known.large_scale, in.cl);
    CHECK(dlb.objective == doctest::Approx(jensen_objective(dlb.x, jm, known, in.cl, ord, in.weights)));

    StochConfig sc;
    sc.eval_sample_count = 2000;
    const auto st = stochastic_slbm(known, in.cl, ord, in.weights, in.budgets, sc, SubsolverConfig{}, seed);
    const auto t2 = std::chrono::steady_clock::now();
    CHECK((t1 - t0) <= 0.1 * (t2 - t1));
    CHECK(st.metric > 0.0);
  }
}

TEST_CASE("stochastic SLBM objective trends upward") {
  for (std::uint64_t seed : {31, 32}) {
    Instance in(testing::desk_config(seed));
    in.set_clustering(static_clustering(in.ch.large_scale, 2));
    const ChannelSet<double> known = partial_csi_view(in.ch, in.cl);
    const DecodingOrder ord = partial_decoding_order(known, in.cl);
    StochConfig sc;
    sc.init = StochInit::random;
    sc.eval_sample_count = 100;
    const auto st = stochastic_slbm(known, in.cl, ord, in.weights, in.budgets, sc, SubsolverConfig{}, seed);
    std::vector<double> avg;
    double window = 0.0;
    for (std::size_t t = 1; t < st.rows.size(); ++t) {
      window += st.rows[t].objective;
      if (t > 20) window -= st.rows[t - 20].objective;
      if (t >= 20) avg.push_back(window / 20.0);
    }
    int violations = 0;
    for (std::size_t i = 1; i < avg.size(); ++i) violations += avg[i] < avg[i - 1] - 1e-9 * std::abs(avg[i - 1]);
    MESSAGE("seed " << seed << ": " << violations << " moving-average decreases over " << avg.size() << " windows");
    CHECK(violations <= static_cast<int>(avg.size() / 100) + 1);
  }
}

TEST_CASE("stochastic SINRC matches or beats stochastic WMMSE in most instances") {
  int wins = 0;
  const int instances = 20;
  for (int i = 0; i < instances; ++i) {
    Instance in(testing::desk_config(100 + static_cast<std::uint64_t>(i)));
    in.set_clustering(static_clustering(in.ch.large_scale, 2));
    const ChannelSet<double> known = partial_csi_view(in.ch, in.cl);
    const DecodingOrder ord = partial_decoding_order(known, in.cl);
    StochConfig sc;
    sc.max_iters = 100;
    sc.eval_sample_count = 100;
    const double s = stochastic_slbm(known, in.cl, ord, in.weights, in.budgets, sc, SubsolverConfig{}, i).metric;
    sc.surrogate_family = SurrogateFamily::wmmse;
    const double w = stochastic_slbm(known, in.cl, ord, in.weights, in.budgets, sc, SubsolverConfig{}, i).metric;
    wins += s >= w;
  }
  MESSAGE("SINRC >= WMMSE in " << wins << " of " << instances);
  CHECK(wins >= 12);
}
