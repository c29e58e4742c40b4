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

#include "combmesh/config.hpp"
#include "combmesh/engine.hpp"
#include "combmesh/io.hpp"
#include "support/oracles.hpp"

using namespace combmesh;
using namespace combmesh::engine;
using photonics::Basis;

namespace {

Scenario calibrated() { return config::default_bundle().scenario; }

Scenario lossless_ideal() {
  Scenario s = calibrated();
  s.channel_a.length_km = 0.0;
  s.channel_b.length_km = 0.0;
  s.channel_a.polarization_drift_rad2_per_s = 0.0;
  s.channel_b.polarization_drift_rad2_per_s = 0.0;
  s.static_misalignment_rad = 0.0;
  s.z_prep_error_rad = 0.0;
  s.timing_residual_ps = 0.0;
  s.mode_match = 1.0;
  s.jitter_a.single_laser_std_khz = 0.0;
  s.jitter_b.single_laser_std_khz = 0.0;
  s.detector.dark_prob = 0.0;
  return s;
}

}  // namespace

TEST_CASE("lossless aligned scenario sits at the extinction floor") {
  Scenario s = lossless_ideal();
  s.mode = RunMode::Analytic;
  const auto r = run_scenario(s);
  // two-sided 30-dB extinction: E_Z = 4 eps (1-eps) / (4 eps (1-eps) + 2)-ish
  const double eps = photonics::polarization_error_floor(s.extinction_db);
  const double approx_floor = 8.0 * eps * (1.0 - eps) / (8.0 * eps * (1.0 - eps) + 2.0);
  CHECK(r.report.qber_z > 0.5 * approx_floor);
  CHECK(r.report.qber_z < 2.0 * approx_floor);

  // Monte Carlo at the same settings agrees within 3 sigma.
  Scenario mc = s;
  mc.mode = RunMode::MonteCarlo;
  mc.pulse_budget = 4e6;
  const auto rm = run_long(mc, 1).front();
  const auto& zz = rm.tally.cell(0, 0, Basis::Z);
  const double expected_err = r.report.qber_z * zz.kept;
  CHECK(std::fabs(zz.errors - expected_err) <= 3.0 * std::sqrt(expected_err) + 3.0);
}

TEST_CASE("calibrated 200-km block reproduces the reference rate band") {
  Scenario s = calibrated();
  const auto r = run_scenario(s);
  CHECK(r.report.key_rate_bps >= 29.0);
  CHECK(r.report.key_rate_bps <= 96.0);
  CHECK(r.report.qber_z > 0.012);
  CHECK(r.report.qber_z < 0.022);
  CHECK(r.report.qber_x > 0.25);
  CHECK(r.report.qber_x < 0.30);

  Scenario longer = s;
  longer.accumulation_s = 10000.0;
  const auto r10 = run_scenario(longer);
  const double ratio = r10.report.key_rate_bps / r.report.key_rate_bps;
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 6.5);
}

TEST_CASE("monte carlo and analytic tallies agree cell by cell") {
  RandomStream seeds(500);
  for (int trial = 0; trial < 3; ++trial) {
    Scenario s = calibrated();
    s.channel_a.length_km = 12.5 * seeds.u01();
    s.channel_b.length_km = s.channel_a.length_km;
    s.static_misalignment_rad = 0.1 * seeds.u01();
    s.intensities.intensities[0] = 0.3 + 0.3 * seeds.u01();
    s.mode = RunMode::MonteCarlo;
    s.pulse_budget = 2e6;
    s.seed = 1000 + trial;
    const auto mc = run_long(s, 1).front();

    const double xi = effective_overlap(s);
    const auto arm = photonics::linear_rotation(s.static_misalignment_rad);
    const auto expected = expected_tally(s, arm, arm, xi, s.pulse_budget);

    int checked = 0;
    for (int ia = 0; ia < 4; ++ia) {
      for (int ib = 0; ib < 4; ++ib) {
        for (Basis basis : {Basis::Z, Basis::X}) {
          const auto& e = expected.cell(ia, ib, basis);
          const auto& m = mc.tally.cell(ia, ib, basis);
          if (e.kept < 25.0) continue;
          CHECK(std::fabs(m.kept - e.kept) <= 4.0 * std::sqrt(e.kept));
          if (e.errors >= 25.0) {
            CHECK(std::fabs(m.errors - e.errors) <= 4.0 * std::sqrt(e.errors));
          }
          ++checked;
        }
      }
    }
    CHECK(checked >= 8);
  }
}

TEST_CASE("fixed seeds give byte-identical results") {
  Scenario s = calibrated();
  s.mode = RunMode::MonteCarlo;
  s.pulse_budget = 3e5;
  s.channel_a.length_km = 5.0;
  s.channel_b.length_km = 5.0;
  const auto a = run_long(s, 1);
  const auto b = run_long(s, 1);
  CHECK(io::result_json(s, a) == io::result_json(s, b));

  Scenario dyn = s;
  dyn.misalignment = MisalignmentMode::Dynamic;
  dyn.mode = RunMode::Analytic;
  dyn.accumulation_s = 100.0;
  const auto c = run_long(dyn, 2);
  const auto d = run_long(dyn, 2);
  CHECK(io::result_json(dyn, c) == io::result_json(dyn, d));
}

TEST_CASE("sharded runs are statistically indistinguishable from single runs") {
  Scenario s = calibrated();
  s.mode = RunMode::MonteCarlo;
  s.pulse_budget = 3e5;
  s.channel_a.length_km = 5.0;
  s.channel_b.length_km = 5.0;

  std::vector<double> single, sharded;
  for (int i = 0; i < 30; ++i) {
    Scenario one = s;
    one.seed = 9000 + i;
    one.shards = 1;
    double kept = 0.0;
    const auto r1 = run_long(one, 1).front();
    for (int ia = 0; ia < 4; ++ia) {
      for (int ib = 0; ib < 4; ++ib) {
        kept += r1.tally.cell(ia, ib, Basis::Z).kept + r1.tally.cell(ia, ib, Basis::X).kept;
      }
    }
    single.push_back(kept);

    Scenario many = s;
    many.seed = 9100 + i;
    many.shards = 8;
    kept = 0.0;
    const auto r2 = run_long(many, 1).front();
    for (int ia = 0; ia < 4; ++ia) {
      for (int ib = 0; ib < 4; ++ib) {
        kept += r2.tally.cell(ia, ib, Basis::Z).kept + r2.tally.cell(ia, ib, Basis::X).kept;
      }
    }
    sharded.push_back(kept);
  }
  CHECK(oracles::ks_two_sample_p(single, sharded) > 0.01);
}

TEST_CASE("long static runs repeat the same expected block") {
  Scenario s = calibrated();
  const auto blocks = run_long(s, 3);
  REQUIRE(blocks.size() == 3);
  for (const auto& b : blocks) {
    CHECK(b.report.key_rate_bps == doctest::Approx(blocks[0].report.key_rate_bps));
  }
}

TEST_CASE("dynamic blocks hold positive key with the loop on") {
  Scenario s = calibrated();
  s.misalignment = MisalignmentMode::Dynamic;
  const auto blocks = run_long(s, 3);
  for (const auto& b : blocks) {
    CHECK(b.report.key_rate_bps > 0.0);
    CHECK(b.control_trace.steady_state_qber < 0.022);
  }

  Scenario off = s;
  off.control.spgd_enabled = false;
  const auto dead = run_long(off, 3);
  CHECK(dead.back().report.key_length_bits == 0.0);
}

TEST_CASE("monte carlo throughput meets the regression gate") {
  Scenario s = calibrated();
  s.mode = RunMode::MonteCarlo;
  s.pulse_budget = 2e6;
  const auto r = run_long(s, 1).front();
  CHECK(r.perf.trials_per_s >= s.min_mc_throughput);
}

TEST_CASE("zero transmittance yields a diagnostic result instead of a crash") {
  Scenario s = calibrated();
  s.channel_a.attenuation_db_per_km = 40.0;
  s.channel_b.attenuation_db_per_km = 40.0;
  const auto r = run_scenario(s);
  CHECK(r.report.key_length_bits == 0.0);
  CHECK_FALSE(r.diagnostics.empty());
}

TEST_CASE("scenario validation rejects bad budgets") {
  Scenario s = calibrated();
  s.mode = RunMode::MonteCarlo;
  s.pulse_budget = 100.0;
  CHECK_THROWS_AS(s.validate(), ContractError);
}

TEST_CASE("rate vs distance is monotone") {
  Scenario s = calibrated();
  const auto curve = rate_vs_distance(s, {0.0, 100.0, 200.0, 300.0});
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].rate_bps <= curve[i - 1].rate_bps + 1e-9);
  }
  CHECK(curve.front().rate_bps / std::fmax(curve[2].rate_bps, 1e-12) >= 1e3);
}
