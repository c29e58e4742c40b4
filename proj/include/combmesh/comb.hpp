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

#ifndef COMBMESH_COMB_HPP
#define COMBMESH_COMB_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "combmesh/errors.hpp"
#include "combmesh/rng.hpp"

namespace combmesh::comb {

// ---------------------------------------------------------------------------
// Frequency plan
// ---------------------------------------------------------------------------

/// Frequency plan of a locked soliton microcomb. Tooth index n counts toward
/// longer wavelength: f(n) = center - n * spacing. The default center sits at
/// half the Rb-87 D2 transition frequency (the 1560-nm image of a 780-nm
/// lock), which is what pins local tooth CH0 near ITU channel C21.
struct CombPlan {
  double center_frequency_thz = 192.115242;
  double repetition_rate_ghz = 49.0;
  int tooth_min = -100;
  int tooth_max = 100;
  double snr_floor_db = 20.0;

  void validate() const {
    if (repetition_rate_ghz <= 0.0) throw ContractError("CombPlan: repetition rate must be positive");
    if (!(tooth_min <= 0 && 0 <= tooth_max)) throw ContractError("CombPlan: tooth range must contain 0");
  }

  int usable_teeth() const { return tooth_max - tooth_min + 1; }
};

/// Optical frequency of tooth n in THz.
double tooth_frequency_thz(const CombPlan& plan, int n);

/// Nearest 50-GHz ITU grid label: full-grid points are "C<k>" (190 + k/10
/// THz), half-grid points "H<k>" (50 GHz above C<k>). Throws ContractError
/// for teeth outside the labeled band.
std::string itu_label(const CombPlan& plan, int n);

// ---------------------------------------------------------------------------
// Repetition-rate lock loop
// ---------------------------------------------------------------------------

struct LockNoiseModel {
  double temperature_walk_mk_per_sqrt_s = 0.03;  // ambient disturbance random walk
  double measurement_noise_hz = 25.0;            // white noise on the beat reading

  void validate() const {
    if (temperature_walk_mk_per_sqrt_s < 0.0 || measurement_noise_hz < 0.0) {
      throw ContractError("LockNoiseModel: noise stds must be nonnegative");
    }
  }
};

struct LockLoopConfig {
  double thermal_hz_per_mk = 2000.0;   // repetition-rate shift per mK
  double gain_p = 0.0;                 // per-step proportional gain
  double gain_i = 0.05;                // per-step integral gain
  LockNoiseModel noise;
  double step_interval_s = 1.0;
  double rf_reference_ghz = 49.0;
  double initial_detuning_hz = 0.0;    // starting error, e.g. before capture
  double divergence_bound_hz = 1e7;

  void validate() const {
    noise.validate();
    if (step_interval_s <= 0.0) throw ContractError("LockLoopConfig: step interval must be positive");
    if (thermal_hz_per_mk == 0.0) throw ContractError("LockLoopConfig: thermal coefficient must be nonzero");
  }
};

struct LockState {
  double time_s = 0.0;
  double delta_omega_r_hz = 0.0;   // RF reference minus repetition rate
  double temperature_offset_mk = 0.0;
};

struct LockTrajectory {
  std::vector<LockState> samples;
  double std_hz = 0.0;
  double p2p_hz = 0.0;
  double temperature_excursion_mk = 0.0;
};

/// Simulate the temperature-feedback repetition-rate lock. Deterministic per
/// (config, duration, seed). Throws InstabilityError when the loop diverges
/// past the configured bound or the temperature excursion leaves the 2-K
/// soliton survival range.
LockTrajectory simulate_lock(const LockLoopConfig& config, double duration_s,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Seed-laser jitter and tooth-pair beat statistics
// ---------------------------------------------------------------------------

/// Residual frequency deviation of one locked seed laser, modeled as an
/// Ornstein-Uhlenbeck process with stationary std single_laser_std_khz.
struct SeedJitterModel {
  double single_laser_std_khz = 21.7;
  double correlation_time_s = 1.0;

  void validate() const {
    if (single_laser_std_khz < 0.0) throw ContractError("SeedJitterModel: std must be nonnegative");
    if (correlation_time_s <= 0.0) throw ContractError("SeedJitterModel: correlation time must be positive");
  }
};

/// One stationary sample of the beat detuning between matching teeth of two
/// independently locked combs, in kHz. Zero mean, std sqrt(sa^2 + sb^2).
double pair_detuning_khz(const SeedJitterModel& a, const SeedJitterModel& b,
                         RandomStream& rng);

/// Advance an OU deviation x (kHz) by dt seconds.
double ou_step(double x, double dt_s, const SeedJitterModel& m, RandomStream& rng);

}  // namespace combmesh::comb

#endif
