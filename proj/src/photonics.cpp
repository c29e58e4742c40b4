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

#include "combmesh/photonics.hpp"

#include "combmesh/quadrature.hpp"

namespace combmesh::photonics {

namespace {

Jones ideal_state(int bit, Basis basis) {
  const double r = 1.0 / std::sqrt(2.0);
  if (basis == Basis::Z) {
    return bit == 0 ? Jones{1.0, 0.0} : Jones{0.0, 1.0};
  }
  return bit == 0 ? Jones{r, r} : Jones{r, -r};
}

}  // namespace

PulseDescriptor encode_pulse(int bit, Basis basis, int intensity_index,
                             const IntensitySet& intensities,
                             double extinction_ratio_db,
                             double z_prep_error_rad) {
  if (bit != 0 && bit != 1) throw ContractError("encode_pulse: bit must be 0 or 1");
  if (intensity_index < 0 || intensity_index > 3) {
    throw ContractError("encode_pulse: intensity index out of range");
  }
  PulseDescriptor p;
  p.mean_photons = intensities.intensities[static_cast<std::size_t>(intensity_index)];
  p.polarization = ideal_state(bit, basis);
  if (basis == Basis::Z && bit == 1 && z_prep_error_rad != 0.0) {
    p.polarization = linear_rotation(z_prep_error_rad).apply(p.polarization);
  }
  p.leak_fraction = polarization_error_floor(extinction_ratio_db);
  p.intensity_tag = intensity_index;
  p.basis_tag = basis;
  p.bit = bit;
  return p;
}

PulseDescriptor propagate(const PulseDescriptor& pulse, const FiberChannel& channel,
                          const DriftState& drift) {
  channel.validate();
  PulseDescriptor out = pulse;
  out.mean_photons = pulse.mean_photons * channel.transmittance();
  out.polarization = drift.unitary.apply(pulse.polarization);
  out.time_offset_ps = pulse.time_offset_ps + drift.timing_offset_ps;
  return out;
}

DriftState drift_step(const DriftState& state, double dt_s, const FiberChannel& channel,
                      RandomStream& rng) {
  if (dt_s <= 0.0) throw ContractError("drift_step: dt must be positive");
  DriftState out = state;

  if (channel.polarization_drift_rad2_per_s > 0.0) {
    // Uniform random axis on the Poincare sphere, Gaussian angle.
    const double z = 2.0 * rng.u01() - 1.0;
    const double phi = kTwoPi * rng.u01();
    const double r = std::sqrt(std::fmax(0.0, 1.0 - z * z));
    const double theta =
        rng.normal(0.0, std::sqrt(channel.polarization_drift_rad2_per_s * dt_s));
    out.unitary =
        axis_rotation(r * std::cos(phi), r * std::sin(phi), z, theta).compose(state.unitary);
  }
  if (channel.timing_drift_ps_per_sqrt_s > 0.0) {
    out.timing_offset_ps += rng.normal(0.0, channel.timing_drift_ps_per_sqrt_s * std::sqrt(dt_s));
  }
  ++out.steps;
  if (out.steps % 1024 == 0) out.unitary.renormalize();
  return out;
}

}  // namespace combmesh::photonics
