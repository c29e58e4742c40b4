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

#include "combmesh/comb.hpp"

#include <algorithm>
#include <cmath>

namespace combmesh::comb {

double tooth_frequency_thz(const CombPlan& plan, int n) {
  plan.validate();
  if (n < plan.tooth_min || n > plan.tooth_max) {
    throw ContractError("tooth_frequency: index " + std::to_string(n) + " outside tooth range");
  }
  return plan.center_frequency_thz - static_cast<double>(n) * plan.repetition_rate_ghz * 1e-3;
}

std::string itu_label(const CombPlan& plan, int n) {
  const double f = tooth_frequency_thz(plan, n);
  // Snap to the 50-GHz grid anchored at 190 THz; even half-steps are the
  // 100-GHz "C" points, odd half-steps the +50 GHz "H" points.
  const long long g = std::llround((f - 190.0) / 0.05);
  const bool half = (g % 2) != 0;
  const long long k = half ? (g - 1) / 2 : g / 2;
  if (k < 1 || k > 72) {
    throw ContractError("itu_label: tooth " + std::to_string(n) + " lies outside the labeled band");
  }
  return (half ? "H" : "C") + std::to_string(k);
}

LockTrajectory simulate_lock(const LockLoopConfig& config, double duration_s,
                             std::uint64_t seed) {
  config.validate();
  if (duration_s <= 0.0) throw ContractError("simulate_lock: duration must be positive");

  RandomStream rng(seed);
  const double dt = config.step_interval_s;
  const double kappa = std::fabs(config.thermal_hz_per_mk);
  const std::size_t steps = static_cast<std::size_t>(std::ceil(duration_s / dt));

  LockTrajectory out;
  out.samples.reserve(steps);

  double ambient_mk = config.initial_detuning_hz / kappa;  // disturbance the loop must absorb
  double applied_mk = 0.0;
  double y_prev = 0.0;

  double sum = 0.0, sum2 = 0.0;
  double lo = 0.0, hi = 0.0, t_lo = 0.0, t_hi = 0.0;
  bool first = true;

  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double delta = kappa * (ambient_mk - applied_mk);
    if (std::fabs(delta) > config.divergence_bound_hz) {
      throw InstabilityError("simulate_lock: loop diverged", t);
    }
    out.samples.push_back({t, delta, applied_mk});

    sum += delta;
    sum2 += delta * delta;
    if (first) {
      lo = hi = delta;
      t_lo = t_hi = applied_mk;
      first = false;
    } else {
      lo = std::min(lo, delta);
      hi = std::max(hi, delta);
      t_lo = std::min(t_lo, applied_mk);
      t_hi = std::max(t_hi, applied_mk);
    }
    if (t_hi - t_lo > 2000.0) {  // 2-K soliton survival range
      throw InstabilityError("simulate_lock: temperature left the soliton survival range", t);
    }

    const double y = delta + rng.normal(0.0, config.noise.measurement_noise_hz);
    applied_mk += (config.gain_i * y + config.gain_p * (y - y_prev)) / kappa;
    y_prev = y;
    ambient_mk += rng.normal(0.0, config.noise.temperature_walk_mk_per_sqrt_s * std::sqrt(dt));
  }

  const double n = static_cast<double>(out.samples.size());
  const double mean = sum / n;
  out.std_hz = std::sqrt(std::fmax(0.0, sum2 / n - mean * mean));
  out.p2p_hz = hi - lo;
  out.temperature_excursion_mk = t_hi - t_lo;
  return out;
}

double pair_detuning_khz(const SeedJitterModel& a, const SeedJitterModel& b,
                         RandomStream& rng) {
  a.validate();
  b.validate();
  const double s = std::sqrt(a.single_laser_std_khz * a.single_laser_std_khz +
                             b.single_laser_std_khz * b.single_laser_std_khz);
  return rng.normal(0.0, s);
}

double ou_step(double x, double dt_s, const SeedJitterModel& m, RandomStream& rng) {
  m.validate();
  if (dt_s <= 0.0) throw ContractError("ou_step: dt must be positive");
  const double a = std::exp(-dt_s / m.correlation_time_s);
  const double s = m.single_laser_std_khz * std::sqrt(std::fmax(0.0, 1.0 - a * a));
  return a * x + rng.normal(0.0, s);
}

}  // namespace combmesh::comb
