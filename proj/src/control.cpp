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

#include "combmesh/control.hpp"

#include <algorithm>
#include <cmath>

#include "combmesh/quadrature.hpp"

namespace combmesh::control {

using interference::bell_probs;
using interference::BellProbs;
using interference::DetectorBank;
using photonics::axis_rotation;
using photonics::Jones;

Unitary2 EpcState::unitary() const {
  // Stages alternate between the sigma_x and sigma_z Poincare axes
  // (fiber-squeezer analog at 45 deg and 0 deg).
  Unitary2 u = Unitary2::identity();
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const bool even = (i % 2) == 0;
    u = axis_rotation(even ? 1.0 : 0.0, 0.0, even ? 0.0 : 1.0, angles[i]).compose(u);
  }
  return u;
}

void EpcState::wrap() {
  for (double& a : angles) {
    a = std::remainder(a, kTwoPi);
    if (a >= M_PI) a -= kTwoPi;     // remainder returns (-pi, pi]; wrap to [-pi, pi)
  }
}

EpcState spgd_step(const EpcState& state,
                   const std::function<double(const EpcState&)>& objective,
                   const SpgdConfig& config, RandomStream& rng) {
  config.validate();
  std::array<double, 4> s;
  for (double& v : s) v = rng.sign();

  EpcState plus = state, minus = state;
  for (std::size_t i = 0; i < 4; ++i) {
    plus.angles[i] += config.perturbation * s[i];
    minus.angles[i] -= config.perturbation * s[i];
  }
  const double dj = objective(plus) - objective(minus);

  EpcState out = state;
  for (std::size_t i = 0; i < 4; ++i) out.angles[i] -= config.gain * dj * s[i];
  out.wrap();
  return out;
}

TimingResult timing_feedback(const std::vector<double>& drift_ps, double dt_s,
                             const TimingLoopConfig& config) {
  config.validate();
  if (dt_s <= 0.0) throw ContractError("timing_feedback: dt must be positive");
  if (dt_s > config.measurement_period_s) {
    throw ContractError("timing_feedback: input must be sampled at least at the loop rate");
  }

  TimingResult out;
  out.residual_ps.reserve(drift_ps.size());

  double correction = 0.0;
  double estimate = 0.0;
  double since_update = config.measurement_period_s;  // correct on the first sample
  double sum = 0.0, sum2 = 0.0;

  for (double d : drift_ps) {
    double residual = d - correction;
    estimate = (1.0 - config.smoothing) * estimate + config.smoothing * residual;
    if (config.enabled) {
      since_update += dt_s;
      if (since_update >= config.measurement_period_s) {
        const double q = config.actuator_resolution_ps;
        const double step = q > 0.0 ? q * std::round(estimate / q) : estimate;
        correction += step;
        estimate -= step;
        since_update = 0.0;
        residual = d - correction;
      }
    }
    out.residual_ps.push_back(residual);
    sum += residual;
    sum2 += residual * residual;
  }
  const double n = static_cast<double>(out.residual_ps.size());
  if (n > 0.0) {
    const double mean = sum / n;
    out.residual_std_ps = std::sqrt(std::fmax(0.0, sum2 / n - mean * mean));
  }
  return out;
}

double rejected_fraction(const Unitary2& epc, const Unitary2& drift, double leak) {
  // Wrong-port rates of interleaved Z and X probes. A Z-only observable
  // leaves the H/V relative phase free (diag(1, e^{i theta}) keeps |H> fixed
  // but scrambles the X states), so the probe cycles both bases.
  const Unitary2 u = epc.compose(drift);
  const double r = 1.0 / std::sqrt(2.0);
  const Jones out_h = u.apply(Jones{1.0, 0.0});
  const Jones out_p = u.apply(Jones{r, r});
  const Jones minus{r, -r};
  const double wrong_z = std::norm(out_h.v);
  const double wrong_x = std::norm(inner(minus, out_p));
  const double p_wrong = 0.5 * (wrong_z + wrong_x);
  // The incoherent extinction leakage sets a floor no rotation removes.
  return (1.0 - leak) * p_wrong + leak * (1.0 - p_wrong);
}

double z_basis_qber(const Unitary2& total_a, const Unitary2& total_b, double mu_a,
                    double mu_b, double leak, double prep_a_rad, double prep_b_rad,
                    const DetectorBank& bank) {
  const Jones h{1.0, 0.0};
  const Jones va = photonics::linear_rotation(prep_a_rad).apply(Jones{0.0, 1.0});
  const Jones vb = photonics::linear_rotation(prep_b_rad).apply(Jones{0.0, 1.0});
  const Jones ja[2] = {total_a.apply(h), total_a.apply(va)};
  const Jones jb[2] = {total_b.apply(h), total_b.apply(vb)};

  double kept = 0.0, errors = 0.0;
  for (int ba = 0; ba < 2; ++ba) {
    for (int bb = 0; bb < 2; ++bb) {
      const interference::BeamInput ia{mu_a, ja[ba], leak};
      const interference::BeamInput ib{mu_b, jb[bb], leak};
      const BellProbs p = bell_probs(ia, ib, 1.0, bank, 64);
      kept += p.kept();
      if (ba == bb) errors += p.kept();  // both Bell outcomes expect anti-correlated Z bits
    }
  }
  return kept > 0.0 ? errors / kept : 0.0;
}

CompensationTrace run_compensation(LinkArm arm_a, LinkArm arm_b,
                                   const CompensationConfig& config, double duration_s,
                                   std::uint64_t seed) {
  config.spgd.validate();
  if (duration_s <= 0.0) throw ContractError("run_compensation: duration must be positive");

  const double leak = photonics::polarization_error_floor(config.extinction_db);
  const DetectorBank bank = DetectorBank::uniform(config.detector);
  const double dt = config.spgd.iteration_period_s;
  const std::size_t steps = static_cast<std::size_t>(std::ceil(duration_s / dt));
  const double probe_budget = 0.5 * config.spgd.iteration_period_s;  // per +/- evaluation

  RandomStream rng(seed);
  RandomStream drift_rng_a = rng.substream(1);
  RandomStream drift_rng_b = rng.substream(2);

  double t_corr_a = 0.0, t_est_a = 0.0, t_since_a = 1e9;
  double t_corr_b = 0.0, t_est_b = 0.0, t_since_b = 1e9;
  auto timing_tick = [&](double& corr, double& est, double& since, double residual) {
    est = (1.0 - config.timing.smoothing) * est + config.timing.smoothing * residual;
    since += dt;
    if (config.timing.enabled && since >= config.timing.measurement_period_s) {
      const double q = config.timing.actuator_resolution_ps;
      const double step = q > 0.0 ? q * std::round(est / q) : est;
      corr += step;
      est -= step;
      since = 0.0;
    }
  };

  // Per-arm mean photons at the measurement node, used for the QBER readout.
  const double mu_a = config.signal_mu * arm_a.channel.transmittance();
  const double mu_b = config.signal_mu * arm_b.channel.transmittance();

  CompensationTrace trace;
  double sample_due = 0.0;
  std::vector<double> qbers;
  qbers.reserve(steps / std::max<std::size_t>(1, static_cast<std::size_t>(config.sample_every_s / dt)) + 2);

  auto noisy_objective = [&](const LinkArm& arm, const EpcState& e, RandomStream& r) {
    const double frac = rejected_fraction(e.unitary(), arm.drift.unitary, leak);
    const double lambda = arm.probe_rate_cps * probe_budget * frac;
    return static_cast<double>(r.poisson(lambda)) / (arm.probe_rate_cps * probe_budget);
  };

  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * dt;

    if (t >= sample_due) {
      const double q = z_basis_qber(arm_a.epc.unitary().compose(arm_a.drift.unitary),
                                    arm_b.epc.unitary().compose(arm_b.drift.unitary),
                                    mu_a, mu_b, leak, config.z_prep_error_rad,
                                    -config.z_prep_error_rad, bank);
      const double tau_rel = (arm_a.drift.timing_offset_ps - t_corr_a) -
                             (arm_b.drift.timing_offset_ps - t_corr_b);
      trace.samples.push_back({t, q, tau_rel});
      qbers.push_back(q);
      if (trace.threshold_crossing_s < 0.0 && q > config.qber_threshold) {
        trace.threshold_crossing_s = t;
      }
      sample_due += config.sample_every_s;
    }

    if (config.loop_on) {
      arm_a.epc = spgd_step(
          arm_a.epc, [&](const EpcState& e) { return noisy_objective(arm_a, e, rng); },
          config.spgd, rng);
      arm_b.epc = spgd_step(
          arm_b.epc, [&](const EpcState& e) { return noisy_objective(arm_b, e, rng); },
          config.spgd, rng);
    }
    arm_a.drift = photonics::drift_step(arm_a.drift, dt, arm_a.channel, drift_rng_a);
    arm_b.drift = photonics::drift_step(arm_b.drift, dt, arm_b.channel, drift_rng_b);
    timing_tick(t_corr_a, t_est_a, t_since_a, arm_a.drift.timing_offset_ps - t_corr_a);
    timing_tick(t_corr_b, t_est_b, t_since_b, arm_b.drift.timing_offset_ps - t_corr_b);
  }

  if (!qbers.empty()) {
    const std::size_t half = qbers.size() / 2;
    double acc = 0.0;
    for (std::size_t i = half; i < qbers.size(); ++i) acc += qbers[i];
    trace.steady_state_qber = acc / static_cast<double>(qbers.size() - half);
  }
  return trace;
}

}  // namespace combmesh::control
