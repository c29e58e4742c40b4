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

#ifndef COMBMESH_CONTROL_HPP
#define COMBMESH_CONTROL_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "combmesh/interference.hpp"
#include "combmesh/photonics.hpp"

namespace combmesh::control {

using photonics::Unitary2;

// ---------------------------------------------------------------------------
// Electrically driven polarization controller
// ---------------------------------------------------------------------------

/// Four retardation stages about alternating Poincare axes; enough to realize
/// any polarization rotation. Angles are kept wrapped to [-pi, pi).
struct EpcState {
  std::array<double, 4> angles{0.0, 0.0, 0.0, 0.0};

  Unitary2 unitary() const;
  void wrap();
};

struct SpgdConfig {
  double gain = 6.0;               // update step gamma
  double perturbation = 0.04;      // dither magnitude delta (rad)
  double iteration_period_s = 0.25;
  std::string objective = "rejected-count";  // feedback observable id

  void validate() const {
    if (gain < 0.0 || perturbation <= 0.0) {
      throw ContractError("SpgdConfig: gain must be nonnegative and perturbation positive");
    }
    if (iteration_period_s <= 0.0) {
      throw ContractError("SpgdConfig: iteration period must be positive");
    }
  }
};

/// One stochastic-parallel-gradient-descent step: draw a random sign vector
/// s, probe J(u + delta s) and J(u - delta s), move against the measured
/// difference: u <- u - gain * dJ * s.
EpcState spgd_step(const EpcState& state,
                   const std::function<double(const EpcState&)>& objective,
                   const SpgdConfig& config, RandomStream& rng);

// ---------------------------------------------------------------------------
// Arrival-time feedback
// ---------------------------------------------------------------------------

struct TimingLoopConfig {
  double measurement_period_s = 1.0;
  double smoothing = 0.6;             // exponential averaging factor in (0,1]
  double actuator_resolution_ps = 0.2;
  bool enabled = true;

  void validate() const {
    if (measurement_period_s <= 0.0) {
      throw ContractError("TimingLoopConfig: measurement period must be positive");
    }
    if (smoothing <= 0.0 || smoothing > 1.0) {
      throw ContractError("TimingLoopConfig: smoothing must be in (0,1]");
    }
    if (actuator_resolution_ps < 0.0) {
      throw ContractError("TimingLoopConfig: actuator resolution must be nonnegative");
    }
  }
};

struct TimingResult {
  std::vector<double> residual_ps;
  double residual_std_ps = 0.0;
};

/// Subtract a quantized, smoothed actuator correction from a measured drift
/// series sampled at dt_s. With the loop disabled the residual is the input.
TimingResult timing_feedback(const std::vector<double>& drift_ps, double dt_s,
                             const TimingLoopConfig& config);

// ---------------------------------------------------------------------------
// Closed-loop polarization compensation of a full link
// ---------------------------------------------------------------------------

/// One fiber arm with its compensator: channel drift, EPC, and the
/// rejected-count feedback observable (Z-basis probes landing in the wrong
/// PBS port, Poisson shot noise at the configured probe flux).
struct LinkArm {
  photonics::FiberChannel channel;
  double probe_rate_cps = 1.0e6;
  photonics::DriftState drift;
  EpcState epc;
};

struct CompensationConfig {
  SpgdConfig spgd;
  bool loop_on = true;
  double extinction_db = 30.0;
  double z_prep_error_rad = 0.07;  // signed +/- across the two arms
  double signal_mu = 0.4;                    // intensity used for the QBER readout
  photonics::DetectorModel detector;
  TimingLoopConfig timing;                   // co-run arrival-time loop
  double sample_every_s = 10.0;              // trace cadence
  double qber_threshold = 0.12;              // report when the loop-off run crosses this
};

struct CompensationSample {
  double time_s = 0.0;
  double qber = 0.0;
  double residual_ps = 0.0;   // co-run timing-loop residual (0 when absent)
};

struct CompensationTrace {
  std::vector<CompensationSample> samples;
  double steady_state_qber = 0.0;      // mean over the last half of the run
  double threshold_crossing_s = -1.0;  // first time qber exceeded the threshold
};

/// Run both arms' SPGD loops against their drifting channels for duration_s
/// and record the Z-basis QBER the resulting BSM would observe.
CompensationTrace run_compensation(LinkArm arm_a, LinkArm arm_b,
                                   const CompensationConfig& config, double duration_s,
                                   std::uint64_t seed);

/// Wrong-port probability of a horizontally polarized probe through
/// drift + EPC; the noiseless core of the feedback observable.
double rejected_fraction(const Unitary2& epc, const Unitary2& drift, double leak);

/// Z-basis QBER of the post-selected BSM for the composed arm transforms,
/// with equal-probability H/V bits on both sides.
double z_basis_qber(const Unitary2& total_a, const Unitary2& total_b, double mu_a,
                    double mu_b, double leak, double prep_a_rad, double prep_b_rad,
                    const interference::DetectorBank& bank);

}  // namespace combmesh::control

#endif
