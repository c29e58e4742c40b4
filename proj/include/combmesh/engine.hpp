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

#ifndef COMBMESH_ENGINE_HPP
#define COMBMESH_ENGINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "combmesh/comb.hpp"
#include "combmesh/control.hpp"
#include "combmesh/interference.hpp"
#include "combmesh/netplan.hpp"
#include "combmesh/photonics.hpp"
#include "combmesh/protocol.hpp"

namespace combmesh::engine {

enum class RunMode : std::uint8_t { Analytic, MonteCarlo };

/// How channel misalignment enters a run: a fixed equivalent rotation per arm
/// (the steady-state residual of a converged compensator) or the live drift +
/// SPGD loop advancing in simulated time.
enum class MisalignmentMode : std::uint8_t { Static, Dynamic };

struct ControlSetup {
  bool spgd_enabled = true;
  control::SpgdConfig spgd;
  double probe_rate_cps = 3.0e4;
  bool timing_enabled = true;
  control::TimingLoopConfig timing;
};

struct Scenario {
  comb::CombPlan plan;
  comb::SeedJitterModel jitter_a, jitter_b;
  photonics::PulseShape shape;
  photonics::IntensitySet intensities;
  double extinction_db = 30.0;
  double z_prep_error_rad = 0.07;  // transmitter Z-pair non-orthogonality, signs
                                    // opposite on the two arms
  double mode_match = 0.985;
  photonics::FiberChannel channel_a, channel_b;
  photonics::DetectorModel detector{0.90, 1e-7, 30.0, "D"};
  ControlSetup control;
  MisalignmentMode misalignment = MisalignmentMode::Static;
  double static_misalignment_rad = 0.022;  // per arm equivalent rotation
  double timing_residual_ps = 2.0;         // relative arrival jitter, static mode
  protocol::FiniteKeyParams finite_key;
  double accumulation_s = 1000.0;
  RunMode mode = RunMode::Analytic;
  double pulse_budget = 1.0e7;
  int shards = 1;
  int threads = 1;
  bool keep_psi_plus_in_z = true;
  std::uint64_t seed = 1;
  std::string channel_label = "H28";
  double min_mc_throughput = 1.0e6;  // trials/s regression gate, advisory

  void validate() const;
  double clock_hz() const { return shape.clock_ghz * 1e9; }
  double pairs_per_block() const { return clock_hz() * accumulation_s; }
};

struct PerfCounters {
  double trials = 0.0;
  double seconds = 0.0;
  double trials_per_s = 0.0;
};

struct RunResult {
  protocol::SiftedTally tally;   // Monte Carlo: raw integer counts
  double mc_scale = 1.0;         // factor mapping the raw tally to a full block
  protocol::DecoyEstimate estimate;
  protocol::KeyReport report;
  control::CompensationTrace control_trace;
  double xi_bar = 1.0;           // effective wavepacket overlap
  PerfCounters perf;
  std::vector<std::string> diagnostics;
  int block_index = 0;
};

/// Expected (per-cell mean) tally for n_pairs pulse pairs with fixed arm
/// transforms and wavepacket overlap. The analytic core of the engine.
protocol::SiftedTally expected_tally(const Scenario& s, const photonics::Unitary2& arm_a,
                                     const photonics::Unitary2& arm_b, double xi,
                                     double n_pairs);

/// Effective overlap after averaging the timing and carrier jitters over
/// their Gaussian ensembles (closed form), capped by the source mode match.
double effective_overlap(const Scenario& s);

/// Execute one accumulation block.
RunResult run_scenario(const Scenario& s);

/// Execute consecutive blocks with persistent drift and control-loop state.
std::vector<RunResult> run_long(const Scenario& s, int blocks);

/// Asymptotic secure-key rate over user-to-user distance, analytic mode.
std::vector<protocol::RatePoint> rate_vs_distance(const Scenario& s,
                                                  const std::vector<double>& distances_km);

}  // namespace combmesh::engine

#endif
