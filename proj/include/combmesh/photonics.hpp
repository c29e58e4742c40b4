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

#ifndef COMBMESH_PHOTONICS_HPP
#define COMBMESH_PHOTONICS_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

#include "combmesh/errors.hpp"
#include "combmesh/rng.hpp"

namespace combmesh::photonics {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Jones-vector algebra (2-component complex polarization amplitudes).
// ---------------------------------------------------------------------------

struct Jones {
  cplx h{0.0, 0.0};
  cplx v{0.0, 0.0};

  double norm2() const { return std::norm(h) + std::norm(v); }
};

inline cplx inner(const Jones& a, const Jones& b) {
  return std::conj(a.h) * b.h + std::conj(a.v) * b.v;
}

/// 2x2 complex matrix [[a, b], [c, d]] acting on Jones vectors.
struct Unitary2 {
  cplx a{1.0, 0.0}, b{0.0, 0.0}, c{0.0, 0.0}, d{1.0, 0.0};

  static Unitary2 identity() { return {}; }

  Jones apply(const Jones& j) const {
    return {a * j.h + b * j.v, c * j.h + d * j.v};
  }

  Unitary2 compose(const Unitary2& rhs) const {  // this * rhs
    return {a * rhs.a + b * rhs.c, a * rhs.b + b * rhs.d,
            c * rhs.a + d * rhs.c, c * rhs.b + d * rhs.d};
  }

  Unitary2 adjoint() const {
    return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)};
  }

  /// Max deviation of U U^dag from identity.
  double unitarity_defect() const {
    const Unitary2 p = compose(adjoint());
    double m = std::abs(p.a - cplx(1.0));
    m = std::fmax(m, std::abs(p.d - cplx(1.0)));
    m = std::fmax(m, std::abs(p.b));
    m = std::fmax(m, std::abs(p.c));
    return m;
  }

  /// Re-orthonormalize columns (Gram-Schmidt); keeps drift compositions
  /// unitary to machine precision over long runs.
  void renormalize() {
    double n1 = std::sqrt(std::norm(a) + std::norm(c));
    a /= n1;
    c /= n1;
    const cplx proj = std::conj(a) * b + std::conj(c) * d;
    b -= proj * a;
    d -= proj * c;
    double n2 = std::sqrt(std::norm(b) + std::norm(d));
    b /= n2;
    d /= n2;
  }
};

/// exp(-i (theta/2) n.sigma) for a unit axis n on the Poincare sphere.
inline Unitary2 axis_rotation(double nx, double ny, double nz, double theta) {
  const double ch = std::cos(0.5 * theta);
  const double sh = std::sin(0.5 * theta);
  // sigma_x=[[0,1],[1,0]], sigma_y=[[0,-i],[i,0]], sigma_z=[[1,0],[0,-1]]
  return {cplx(ch, -sh * nz), cplx(-sh * ny, -sh * nx),
          cplx(sh * ny, -sh * nx), cplx(ch, sh * nz)};
}

/// Rotation of the linear-polarization plane by theta (H -> cos,sin).
inline Unitary2 linear_rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {cplx(c), cplx(-s), cplx(s), cplx(c)};
}

/// Unit-norm polarization state; constructor enforces normalization to 1e-12.
struct PolarizationState {
  Jones jones;

  PolarizationState() : jones{cplx(1.0), cplx(0.0)} {}
  explicit PolarizationState(const Jones& j) : jones(j) {
    if (std::fabs(j.norm2() - 1.0) > 1e-12) {
      throw ContractError("PolarizationState: Jones vector is not unit norm");
    }
  }

  static PolarizationState horizontal() { return PolarizationState(Jones{1.0, 0.0}); }
  static PolarizationState vertical() { return PolarizationState(Jones{0.0, 1.0}); }
  static PolarizationState diag_plus() {
    const double r = 1.0 / std::sqrt(2.0);
    return PolarizationState(Jones{r, r});
  }
  static PolarizationState diag_minus() {
    const double r = 1.0 / std::sqrt(2.0);
    return PolarizationState(Jones{r, -r});
  }
};

// ---------------------------------------------------------------------------
// Source, channel and detector models.
// ---------------------------------------------------------------------------

struct PulseShape {
  double fwhm_ps = 95.0;      // intensity full width at half maximum
  double clock_ghz = 2.5;     // pulse repetition rate

  void validate() const {
    if (fwhm_ps <= 0.0) throw ContractError("PulseShape: fwhm must be positive");
    if (clock_ghz <= 0.0) throw ContractError("PulseShape: clock rate must be positive");
    if (fwhm_ps >= 1000.0 / clock_ghz) {
      throw ContractError("PulseShape: pulse does not fit the clock period");
    }
  }

  /// Gaussian intensity-profile standard deviation in ps.
  double sigma_ps() const { return fwhm_ps / (2.0 * std::sqrt(2.0 * std::log(2.0))); }
};

enum class Basis : std::uint8_t { Z = 0, X = 1 };

/// Four-intensity decoy source: {signal mu, decoy nu, decoy omega, vacuum}.
/// Index order is fixed: 0=mu, 1=nu, 2=omega, 3=vacuum.
struct IntensitySet {
  std::array<double, 4> intensities{0.28, 0.16, 0.064, 0.0};
  std::array<double, 4> send_probabilities{0.41, 0.10, 0.34, 0.15};
  std::array<double, 4> z_basis_probabilities{1.0, 0.0, 0.0, 0.0};

  void validate() const {
    double psum = 0.0;
    for (double p : send_probabilities) {
      if (p < 0.0 || p > 1.0) throw ContractError("IntensitySet: probability out of [0,1]");
      psum += p;
    }
    if (std::fabs(psum - 1.0) > 1e-9) {
      throw ContractError("IntensitySet: send probabilities must sum to 1");
    }
    for (double p : z_basis_probabilities) {
      if (p < 0.0 || p > 1.0) throw ContractError("IntensitySet: basis probability out of [0,1]");
    }
    for (double m : intensities) {
      if (m < 0.0) throw ContractError("IntensitySet: negative intensity");
    }
    if (!(intensities[0] > intensities[1] && intensities[1] > intensities[2] &&
          intensities[2] > intensities[3])) {
      throw ContractError("IntensitySet: intensities must be distinct and ordered mu > nu > omega > vacuum");
    }
    if (intensities[3] != 0.0) throw ContractError("IntensitySet: vacuum intensity must be 0");
  }
};

struct FiberChannel {
  double length_km = 100.0;
  double attenuation_db_per_km = 0.2;    // ULL profile: 0.16
  double polarization_drift_rad2_per_s = 0.0;
  double timing_drift_ps_per_sqrt_s = 0.0;

  void validate() const {
    if (length_km < 0.0) throw ContractError("FiberChannel: negative length");
    if (attenuation_db_per_km < 0.0) throw ContractError("FiberChannel: negative attenuation");
  }

  double transmittance() const {
    return std::pow(10.0, -attenuation_db_per_km * length_km / 10.0);
  }
};

struct DetectorModel {
  double efficiency = 0.80;
  double dark_prob = 1e-7;    // per gate
  double jitter_ps = 30.0;    // recorded; folded into the timing-residual budget
  std::string label = "D1H";

  void validate() const {
    if (efficiency < 0.0 || efficiency > 1.0) throw ContractError("DetectorModel: efficiency out of [0,1]");
    if (dark_prob < 0.0 || dark_prob >= 1.0) throw ContractError("DetectorModel: dark_prob out of [0,1)");
  }
};

/// One emitted weak coherent pulse as it travels through the model. The
/// finite-extinction leakage is carried as an incoherent orthogonal-
/// polarization fraction; it does not interfere with the main component and
/// no polarization transform can remove it.
struct PulseDescriptor {
  double mean_photons = 0.0;
  Jones polarization{cplx(1.0), cplx(0.0)};
  double leak_fraction = 0.0;
  double time_offset_ps = 0.0;
  double carrier_detuning_khz = 0.0;
  int intensity_tag = 0;   // index into IntensitySet
  Basis basis_tag = Basis::Z;
  int bit = 0;
};

/// Slowly varying channel state: polarization unitary and timing offset.
struct DriftState {
  Unitary2 unitary = Unitary2::identity();
  double timing_offset_ps = 0.0;
  std::uint64_t steps = 0;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Relative power of the orthogonal leakage for a given extinction ratio.
inline double extinction_leak(double extinction_ratio_db) {
  if (extinction_ratio_db <= 0.0) {
    throw ContractError("encode_pulse: extinction ratio must be positive");
  }
  return std::pow(10.0, -extinction_ratio_db / 10.0);
}

/// Intrinsic polarization error floor for a finite extinction ratio:
/// eps = L / (1 + L) with L the relative leaked power.
inline double polarization_error_floor(double extinction_ratio_db) {
  const double l = extinction_leak(extinction_ratio_db);
  return l / (1.0 + l);
}

/// Encode (bit, basis) into the ideal polarization state plus the
/// incoherent orthogonal leakage fraction of a finite extinction ratio.
/// z_prep_error_rad models a transmitter flaw: the Z-basis bit-1 state is
/// rotated away from exact orthogonality with bit 0, which no downstream
/// polarization transform can undo. Deterministic.
PulseDescriptor encode_pulse(int bit, Basis basis, int intensity_index,
                             const IntensitySet& intensities,
                             double extinction_ratio_db,
                             double z_prep_error_rad = 0.0);

/// Apply channel loss, the current polarization transform and the current
/// timing offset to a pulse.
PulseDescriptor propagate(const PulseDescriptor& pulse, const FiberChannel& channel,
                          const DriftState& drift);

/// Advance the channel polarization state by an isotropic random rotation
/// with angle variance rate*dt, and the timing offset by a random-walk step.
DriftState drift_step(const DriftState& state, double dt_s, const FiberChannel& channel,
                      RandomStream& rng);

/// Click probability of a threshold detector seeing a mean photon exposure.
inline double click_probability(double exposure, const DetectorModel& m) {
  if (exposure < 0.0) throw ContractError("click_probability: negative exposure");
  return m.dark_prob + (1.0 - m.dark_prob) * (-std::expm1(-m.efficiency * exposure));
}

/// Sample one threshold-detector click.
inline bool detect(double exposure, const DetectorModel& m, RandomStream& rng) {
  return rng.bernoulli(click_probability(exposure, m));
}

}  // namespace combmesh::photonics

#endif
