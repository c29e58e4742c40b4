/**
 * Copyright 2026 The combmesh authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "combmesh/protocol.hpp"
#include "support/oracles.hpp"

using namespace combmesh;
using namespace combmesh::protocol;
using photonics::Basis;
using photonics::IntensitySet;

namespace {

IntensitySet oracle_set() {
  IntensitySet s;
  s.intensities = {0.5, 0.1, 0.04, 0.0};
  s.send_probabilities = {0.4, 0.25, 0.2, 0.15};
  s.z_basis_probabilities = {1.0, 0.0, 0.0, 0.0};
  return s;
}

}  // namespace

TEST_CASE("sifting keeps matched bases and reconciles bits") {
  using interference::BsmOutcome;
  // Z basis: both outcomes imply anti-correlated bits.
  auto r = sift(BsmOutcome::PsiMinus, Basis::Z, Basis::Z, 0, 1);
  CHECK(r.kept);
  CHECK_FALSE(r.error);
  r = sift(BsmOutcome::PsiMinus, Basis::Z, Basis::Z, 0, 0);
  CHECK(r.kept);
  CHECK(r.error);
  r = sift(BsmOutcome::PsiPlus, Basis::Z, Basis::Z, 1, 0);
  CHECK(r.kept);
  CHECK_FALSE(r.error);
  // X basis: PsiPlus means correlated, PsiMinus anti-correlated.
  r = sift(BsmOutcome::PsiPlus, Basis::X, Basis::X, 1, 1);
  CHECK(r.kept);
  CHECK_FALSE(r.error);
  r = sift(BsmOutcome::PsiPlus, Basis::X, Basis::X, 0, 1);
  CHECK(r.kept);
  CHECK(r.error);
  r = sift(BsmOutcome::PsiMinus, Basis::X, Basis::X, 0, 1);
  CHECK(r.kept);
  CHECK_FALSE(r.error);
  // Mismatched bases or no outcome are discarded.
  CHECK_FALSE(sift(BsmOutcome::PsiMinus, Basis::Z, Basis::X, 0, 1).kept);
  CHECK_FALSE(sift(BsmOutcome::None, Basis::Z, Basis::Z, 0, 1).kept);
  // Variant: PsiPlus dropped in the key basis.
  CHECK_FALSE(sift(BsmOutcome::PsiPlus, Basis::Z, Basis::Z, 0, 1, false).kept);
  CHECK(sift(BsmOutcome::PsiMinus, Basis::Z, Basis::Z, 0, 1, false).kept);
}

TEST_CASE("sifting is symmetric under party swap with bit flips") {
  using interference::BsmOutcome;
  for (BsmOutcome o : {BsmOutcome::PsiPlus, BsmOutcome::PsiMinus, BsmOutcome::None}) {
    for (Basis ba : {Basis::Z, Basis::X}) {
      for (Basis bb : {Basis::Z, Basis::X}) {
        for (int bit_a = 0; bit_a < 2; ++bit_a) {
          for (int bit_b = 0; bit_b < 2; ++bit_b) {
            const auto lhs = sift(o, ba, bb, bit_a, bit_b);
            const auto rhs = sift(o, bb, ba, 1 - bit_b, 1 - bit_a);
            CHECK(lhs.kept == rhs.kept);
            CHECK(lhs.error == rhs.error);
          }
        }
      }
    }
  }
}

TEST_CASE("binary entropy") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-12));
  // frozen from a long-double evaluation
  CHECK(binary_entropy(0.11) == doctest::Approx(0.4999157).epsilon(1e-6));
  CHECK_THROWS_AS(binary_entropy(-0.1), ContractError);
  CHECK_THROWS_AS(binary_entropy(1.1), ContractError);
}

TEST_CASE("chernoff interval basics") {
  const auto zero = chernoff_bounds(0.0, 1e-6);
  CHECK(zero.lower == 0.0);
  CHECK(zero.upper == doctest::Approx(std::log(2e6)).epsilon(1e-9));

  double prev_ratio = 1e9;
  for (double k : {1e2, 1e4, 1e6}) {
    const auto ci = chernoff_bounds(k, 1e-10);
    CHECK(ci.lower < k);
    CHECK(ci.upper > k);
    const double ratio = (ci.upper - ci.lower) / k;
    CHECK(ratio < prev_ratio);
    prev_ratio = ratio;
  }
  CHECK_THROWS_AS(chernoff_bounds(-1.0, 1e-6), ContractError);
  CHECK_THROWS_AS(chernoff_bounds(10.0, 2.0), ContractError);
}

TEST_CASE("chernoff coverage against Poisson draws") {
  RandomStream rng(77);
  const double lambda = 1000.0;
  const double eps = 1e-3;
  int misses = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const double k = static_cast<double>(rng.poisson(lambda));
    const auto ci = chernoff_bounds(k, eps);
    misses += (lambda < ci.lower || lambda > ci.upper);
  }
  CHECK(misses <= static_cast<int>(eps * draws));
}

TEST_CASE("realization lower bound") {
  CHECK(chernoff_realization_lower(0.0, 1e-6) == 0.0);
  CHECK(chernoff_realization_lower(5.0, 1e-10) == 0.0);  // too small to guarantee
  const double k = chernoff_realization_lower(1e6, 1e-10);
  CHECK(k < 1e6);
  CHECK(k > 1e6 - 10.0 * std::sqrt(1e6));
}

TEST_CASE("tally bookkeeping") {
  SiftedTally t;
  t.record_sent(0, 0, Basis::Z, 10.0);
  t.record_kept(0, 0, Basis::Z, true, 2.0);
  CHECK_NOTHROW(t.validate());
  SiftedTally u = t;
  u.merge(t);
  CHECK(u.cell(0, 0, Basis::Z).sent == 20.0);
  u.scale(0.5);
  CHECK(u.cell(0, 0, Basis::Z).sent == 10.0);

  SiftedTally bad;
  bad.record_kept(1, 1, Basis::X, false, 5.0);  // kept without sent
  CHECK_THROWS_AS(bad.validate(), ContractError);
  CHECK_THROWS_AS(t.cell(4, 0, Basis::Z), ContractError);
}

TEST_CASE("estimators bound the forward model in the asymptotic limit") {
  const auto set = oracle_set();
  const auto model = oracles::physical_yield_model(0.01, 0.012, 1e-8, 0.015);
  const auto tally = oracles::forward_tally(model, set, 1e14);
  FiniteKeyParams asym;
  asym.asymptotic = true;

  for (EstimatorKind kind : {EstimatorKind::AnalyticTwoDecoy, EstimatorKind::JointLp}) {
    FiniteKeyParams p = asym;
    p.estimator = kind;
    const auto est = run_estimator(tally, set, p);
    REQUIRE(est.feasible);
    CHECK(est.y11_lower <= model.y11() * (1.0 + 1e-9));
    CHECK(est.e11_upper >= model.e11() * (1.0 - 1e-9));
  }

  // The joint estimator is asymptotically tight to within one percent.
  FiniteKeyParams lp = asym;
  lp.estimator = EstimatorKind::JointLp;
  const auto est = run_estimator(tally, set, lp);
  CHECK(model.y11() <= est.y11_lower * 1.01);
}

TEST_CASE("all-vacuum statistics give zero yield") {
  const auto set = oracle_set();
  SiftedTally t;
  t.accumulation_s = 1000.0;
  t.clock_hz = 1e9;
  for (int ia = 0; ia < 4; ++ia) {
    for (int ib = 0; ib < 4; ++ib) {
      t.cell(ia, ib, Basis::X).sent = 1e9;
      t.cell(ia, ib, Basis::Z).sent = 1e9;
    }
  }
  FiniteKeyParams p;
  for (EstimatorKind kind : {EstimatorKind::AnalyticTwoDecoy, EstimatorKind::JointLp}) {
    p.estimator = kind;
    const auto est = run_estimator(t, set, p);
    CHECK(est.y11_lower == 0.0);
    CHECK_FALSE(est.feasible);
  }
}

TEST_CASE("estimator coverage over randomized finite instances") {
  RandomStream rng(2024);
  const auto set = oracle_set();
  FiniteKeyParams p;  // profile epsilon 1e-10
  int failures_lp = 0, failures_an = 0, feasible_lp = 0;
  const int instances = 120;  // the acceptance suite runs the full 500
  for (int i = 0; i < instances; ++i) {
    const auto model = oracles::random_yield_model(rng);
    const auto expected = oracles::forward_tally(model, set, 1e12);
    const auto sampled = oracles::sample_tally(expected, rng);

    p.estimator = EstimatorKind::JointLp;
    const auto lp = run_estimator(sampled, set, p);
    if (lp.feasible) {
      ++feasible_lp;
      failures_lp += lp.y11_lower > model.y11() || lp.e11_upper < model.e11();
    }
    p.estimator = EstimatorKind::AnalyticTwoDecoy;
    const auto an = run_estimator(sampled, set, p);
    if (an.feasible) {
      failures_an += an.y11_lower > model.y11() || an.e11_upper < model.e11();
    }
  }
  CHECK(failures_lp == 0);
  CHECK(failures_an == 0);
  CHECK(feasible_lp > instances / 2);
}

TEST_CASE("key length formula behavior") {
  const auto set = oracle_set();
  const auto model = oracles::physical_yield_model(0.01, 0.01, 1e-8, 0.01);
  const auto tally = oracles::forward_tally(model, set, 1e13);
  FiniteKeyParams p;
  p.estimator = EstimatorKind::JointLp;
  const auto est = run_estimator(tally, set, p);
  REQUIRE(est.feasible);
  const auto report = key_length(est, tally, p);
  CHECK(report.key_length_bits > 0.0);
  CHECK(report.key_rate_bps ==
        doctest::Approx(report.key_length_bits / tally.accumulation_s));

  // entropy term vanishes at e11 = 1/2
  DecoyEstimate half = est;
  half.e11_upper = 0.5;
  half.n11_lower = est.n11_lower * 0.01;
  CHECK(key_length(half, tally, p).key_length_bits == 0.0);

  // monotonicity under perturbations
  DecoyEstimate better = est;
  better.n11_lower *= 1.1;
  CHECK(key_length(better, tally, p).key_length_bits >= report.key_length_bits);
  DecoyEstimate worse = est;
  worse.e11_upper = std::min(0.5, est.e11_upper * 1.3);
  CHECK(key_length(worse, tally, p).key_length_bits <= report.key_length_bits);

  SiftedTally noisier = tally;
  noisier.cell(0, 0, Basis::Z).errors *= 2.0;
  CHECK(key_length(est, noisier, p).key_length_bits <= report.key_length_bits);

  SiftedTally empty;
  empty.accumulation_s = 1000.0;
  const auto infeasible = key_length(est, empty, p);
  CHECK_FALSE(infeasible.feasible);
  CHECK(infeasible.key_length_bits == 0.0);
}

TEST_CASE("finite-size rate converges to the asymptotic rate") {
  const auto set = oracle_set();
  const auto model = oracles::physical_yield_model(0.008, 0.009, 1e-8, 0.01);
  FiniteKeyParams lp;
  lp.estimator = EstimatorKind::JointLp;

  auto rate_at = [&](double pairs, bool asym) {
    auto tally = oracles::forward_tally(model, set, pairs);
    FiniteKeyParams p = lp;
    p.asymptotic = asym;
    const auto est = run_estimator(tally, set, p);
    const auto rep = key_length(est, tally, p);
    return rep.key_rate_bps;
  };

  const double finite = rate_at(2.5e12 * 1e6, false);
  const double asym = rate_at(2.5e12 * 1e6, true);
  REQUIRE(asym > 0.0);
  CHECK(std::fabs(finite - asym) / asym < 0.01);

  // finite-size penalty is nonnegative at every block size
  for (double pairs : {2.5e11, 2.5e12, 2.5e13}) {
    CHECK(rate_at(pairs, false) <= rate_at(pairs, true) + 1e-9);
  }
}

TEST_CASE("asymptotic rate falls monotonically with distance") {
  const auto set = oracle_set();
  auto tally_at = [&](double km) {
    const double eta = 0.9 * std::pow(10.0, -0.2 * km / 2.0 / 10.0);
    const auto model = oracles::physical_yield_model(eta, eta, 1e-8, 0.01);
    return oracles::forward_tally(model, set, 2.5e12);
  };
  FiniteKeyParams p;
  p.estimator = EstimatorKind::JointLp;
  const auto curve = asymptotic_rate(tally_at, set, p, {0.0, 50.0, 100.0, 150.0, 200.0});
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].rate_bps <= curve[i - 1].rate_bps);
  }
  REQUIRE(curve.back().rate_bps > 0.0);
  CHECK(curve.front().rate_bps / curve.back().rate_bps >= 1e3);
}

TEST_CASE("coordinate descent improves the rate functional") {
  // Smooth synthetic objective with a known interior optimum.
  auto rate_of = [](const IntensitySet& s) {
    const double mu = s.intensities[0], nu = s.intensities[1], om = s.intensities[2];
    const double pm = s.send_probabilities[0];
    double v = 100.0;
    v -= 200.0 * (std::log(mu / 0.3) * std::log(mu / 0.3));
    v -= 50.0 * (std::log(nu / 0.12) * std::log(nu / 0.12));
    v -= 20.0 * (std::log(om / 0.05) * std::log(om / 0.05));
    v -= 100.0 * (pm - 0.5) * (pm - 0.5);
    return v;
  };
  IntensitySet init = oracle_set();
  const double before = rate_of(init);
  const auto best = optimize_intensities(rate_of, init, 10);
  CHECK(best.rate_bps > before);
  CHECK(best.set.intensities[0] == doctest::Approx(0.3).epsilon(0.2));
}
