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

#include "combmesh/photonics.hpp"
#include "support/oracles.hpp"

using namespace combmesh;
using namespace combmesh::photonics;

namespace {
IntensitySet default_set() { return IntensitySet{}; }
}  // namespace

TEST_CASE("encode produces the ideal states") {
  const auto set = default_set();
  const auto h = encode_pulse(0, Basis::Z, 0, set, 300.0);
  CHECK(std::abs(h.polarization.h - cplx(1.0)) < 1e-12);
  CHECK(std::abs(h.polarization.v) < 1e-12);
  CHECK(h.leak_fraction < 1e-15);  // ER -> infinity

  const auto minus = encode_pulse(1, Basis::X, 0, set, 300.0);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(minus.polarization.h - cplx(r)) < 1e-12);
  CHECK(std::abs(minus.polarization.v - cplx(-r)) < 1e-12);
}

TEST_CASE("finite extinction sets the polarization error floor") {
  CHECK(polarization_error_floor(30.0) ==
        doctest::Approx(1e-3 / (1.0 + 1e-3)).epsilon(1e-12));
  CHECK(polarization_error_floor(30.0) == doctest::Approx(9.99e-4).epsilon(1e-3));
  CHECK_THROWS_AS(polarization_error_floor(0.0), ContractError);

  // Measuring the encoded state in its own basis errs at the floor rate.
  const auto set = default_set();
  const auto p = encode_pulse(0, Basis::Z, 0, set, 30.0);
  const double wrong = (1.0 - p.leak_fraction) * std::norm(p.polarization.v) +
                       p.leak_fraction * std::norm(p.polarization.h);
  CHECK(wrong == doctest::Approx(polarization_error_floor(30.0)).epsilon(1e-12));

  RandomStream rng(21);
  const int n = 1000000;
  int errs = 0;
  for (int i = 0; i < n; ++i) errs += rng.bernoulli(wrong) ? 1 : 0;
  const double sigma = std::sqrt(wrong * (1.0 - wrong) * n);
  CHECK(std::fabs(errs - wrong * n) <= 3.0 * sigma);
}

TEST_CASE("Z preparation error tilts only the bit-1 state") {
  const auto set = default_set();
  const auto v = encode_pulse(1, Basis::Z, 0, set, 300.0, 0.05);
  CHECK(std::norm(v.polarization.h) == doctest::Approx(std::sin(0.05) * std::sin(0.05)));
  const auto h = encode_pulse(0, Basis::Z, 0, set, 300.0, 0.05);
  CHECK(std::norm(h.polarization.v) < 1e-12);
  const auto plus = encode_pulse(0, Basis::X, 0, set, 300.0, 0.05);
  CHECK(std::norm(plus.polarization.h) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("propagation scales, rotates and shifts") {
  const auto set = default_set();
  auto pulse = encode_pulse(0, Basis::Z, 0, set, 30.0);
  pulse.time_offset_ps = 1.0;

  FiberChannel zero{0.0, 0.2, 0.0, 0.0};
  DriftState id;
  const auto same = propagate(pulse, zero, id);
  CHECK(same.mean_photons == pulse.mean_photons);
  CHECK(std::abs(same.polarization.h - pulse.polarization.h) < 1e-15);
  CHECK(same.time_offset_ps == pulse.time_offset_ps);

  FiberChannel hundred{100.0, 0.2, 0.0, 0.0};
  const auto attenuated = propagate(pulse, hundred, id);
  CHECK(attenuated.mean_photons == doctest::Approx(pulse.mean_photons * 1e-2).epsilon(1e-12));

  DriftState shifted;
  shifted.timing_offset_ps = 3.5;
  CHECK(propagate(pulse, zero, shifted).time_offset_ps == doctest::Approx(4.5));
}

TEST_CASE("transmittance is multiplicative in length") {
  const auto set = default_set();
  const auto pulse = encode_pulse(0, Basis::Z, 0, set, 30.0);
  DriftState id;
  for (double l1 : {10.0, 37.5, 80.0}) {
    for (double l2 : {5.0, 62.5}) {
      FiberChannel a{l1, 0.2, 0.0, 0.0}, b{l2, 0.2, 0.0, 0.0}, ab{l1 + l2, 0.2, 0.0, 0.0};
      const double two_hop = propagate(propagate(pulse, a, id), b, id).mean_photons;
      const double one_hop = propagate(pulse, ab, id).mean_photons;
      CHECK(two_hop == doctest::Approx(one_hop).epsilon(1e-12));
    }
  }
}

TEST_CASE("drift with zero rate leaves the unitary untouched") {
  FiberChannel ch{100.0, 0.2, 0.0, 0.0};
  RandomStream rng(5);
  DriftState d;
  d = drift_step(d, 1.0, ch, rng);
  CHECK(std::abs(d.unitary.a - cplx(1.0)) < 1e-15);
  CHECK(std::abs(d.unitary.b) < 1e-15);
  CHECK(d.timing_offset_ps == 0.0);
}

TEST_CASE("drift accumulates the configured angle variance") {
  FiberChannel ch{100.0, 0.2, 2e-4, 0.0};
  RandomStream rng(6);
  const double T = 50.0, dt = 0.5;
  const int trials = 4000;
  std::vector<double> sq;
  sq.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    DriftState d;
    for (double s = 0.0; s < T; s += dt) d = drift_step(d, dt, ch, rng);
    const double c = std::min(1.0, std::abs(d.unitary.a + d.unitary.d) / 2.0);
    const double angle = 2.0 * std::acos(c);
    sq.push_back(angle * angle);
  }
  const double m = oracles::mean(sq);
  const double sem = oracles::sample_std(sq) / std::sqrt(static_cast<double>(trials));
  CHECK(std::fabs(m - 2e-4 * T) <= 3.0 * sem + 0.02 * 2e-4 * T);
}

TEST_CASE("independent drift streams are uncorrelated") {
  FiberChannel ch{100.0, 0.2, 1e-4, 1.0};
  RandomStream r1(100), r2(200);
  DriftState d1, d2;
  std::vector<double> inc1, inc2;
  double prev1 = 0.0, prev2 = 0.0;
  for (int i = 0; i < 10000; ++i) {
    d1 = drift_step(d1, 0.1, ch, r1);
    d2 = drift_step(d2, 0.1, ch, r2);
    inc1.push_back(d1.timing_offset_ps - prev1);
    inc2.push_back(d2.timing_offset_ps - prev2);
    prev1 = d1.timing_offset_ps;
    prev2 = d2.timing_offset_ps;
  }
  const double m1 = oracles::mean(inc1), m2 = oracles::mean(inc2);
  double cov = 0.0;
  for (std::size_t i = 0; i < inc1.size(); ++i) cov += (inc1[i] - m1) * (inc2[i] - m2);
  cov /= static_cast<double>(inc1.size());
  const double rho = cov / (oracles::sample_std(inc1) * oracles::sample_std(inc2));
  CHECK(std::fabs(rho) < 0.05);
}

TEST_CASE("long drift compositions stay unitary") {
  FiberChannel ch{100.0, 0.2, 1e-3, 0.0};
  RandomStream rng(8);
  DriftState d;
  for (int i = 0; i < 20000; ++i) d = drift_step(d, 0.25, ch, rng);
  CHECK(d.unitary.unitarity_defect() < 1e-10);

  // Norm preserved through encode + propagate.
  const auto set = default_set();
  const auto pulse = encode_pulse(0, Basis::X, 0, set, 30.0);
  const auto out = propagate(pulse, ch, d);
  CHECK(std::fabs(out.polarization.norm2() - 1.0) < 1e-10);
}

TEST_CASE("threshold detector click probability") {
  DetectorModel ideal{1.0, 0.0, 0.0, "D"};
  CHECK(click_probability(0.0, ideal) == 0.0);
  CHECK(click_probability(1e9, ideal) == doctest::Approx(1.0));
  DetectorModel m{0.5, 1e-6, 0.0, "D"};
  CHECK(click_probability(1.0, m) ==
        doctest::Approx(1e-6 + (1.0 - 1e-6) * (1.0 - std::exp(-0.5))).epsilon(1e-12));
  CHECK(click_probability(1.0, m) == doctest::Approx(0.3935).epsilon(1e-3));
  CHECK_THROWS_AS(click_probability(-1.0, m), ContractError);
}

TEST_CASE("click probability is monotone in its inputs") {
  RandomStream rng(12);
  for (int i = 0; i < 2000; ++i) {
    const double e1 = 3.0 * rng.u01(), e2 = e1 + 2.0 * rng.u01();
    const double eff1 = rng.u01(), eff2 = std::min(1.0, eff1 + rng.u01() * (1.0 - eff1));
    const double d1 = 0.5 * rng.u01(), d2 = std::min(0.99, d1 + 0.4 * rng.u01());
    DetectorModel m{eff1, d1, 0.0, "D"};
    CHECK(click_probability(e2, m) >= click_probability(e1, m));
    DetectorModel m2{eff2, d1, 0.0, "D"};
    CHECK(click_probability(e1, m2) >= click_probability(e1, m));
    DetectorModel m3{eff1, d2, 0.0, "D"};
    CHECK(click_probability(e1, m3) >= click_probability(e1, m));
  }
}

TEST_CASE("invalid models are rejected") {
  IntensitySet bad = default_set();
  bad.send_probabilities = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), ContractError);
  IntensitySet unordered = default_set();
  unordered.intensities = {0.1, 0.2, 0.05, 0.0};
  CHECK_THROWS_AS(unordered.validate(), ContractError);
  PulseShape wide{500.0, 2.5};
  CHECK_THROWS_AS(wide.validate(), ContractError);
  DetectorModel m{1.5, 0.0, 0.0, "D"};
  CHECK_THROWS_AS(m.validate(), ContractError);
  CHECK_THROWS_AS(PolarizationState(Jones{1.0, 1.0}), ContractError);
}
