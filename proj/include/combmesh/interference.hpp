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

#ifndef COMBMESH_INTERFERENCE_HPP
#define COMBMESH_INTERFERENCE_HPP

#include <cstdint>
#include <vector>

#include "combmesh/photonics.hpp"

namespace combmesh::interference {

using photonics::DetectorModel;
using photonics::Jones;
using photonics::PulseDescriptor;
using photonics::PulseShape;

// ---------------------------------------------------------------------------
// Wavepacket overlap
// ---------------------------------------------------------------------------

/// Scalar overlap magnitude of two Gaussian wavepackets (temporal x spectral).
struct ModeOverlap {
  double xi = 1.0;
};

/// |<psi1|psi2>| for unit-norm Gaussian amplitude envelopes with relative
/// delay tau and carrier detuning dnu:
///   xi = exp(-tau^2 / (8 sigma^2)) * exp(-2 pi^2 dnu^2 sigma^2),
/// sigma being the intensity-profile std of the pulse shape.
ModeOverlap mode_overlap(const PulseShape& shape, double tau_ps, double delta_nu_khz);

// ---------------------------------------------------------------------------
// Bell-state measurement geometry
// ---------------------------------------------------------------------------

/// Clicks of the four detectors behind the 50:50 BS + two PBS arrangement.
struct ClickPattern {
  bool d1h = false, d1v = false, d2h = false, d2v = false;

  int count() const { return int(d1h) + int(d1v) + int(d2h) + int(d2v); }
  bool operator==(const ClickPattern&) const = default;
};

enum class BsmOutcome : std::uint8_t { PsiPlus, PsiMinus, None };

/// Post-selected Bell-state classification:
///   PsiMinus: exactly {D1H, D2V} or {D1V, D2H}
///   PsiPlus:  exactly {D1H, D1V} or {D2H, D2V}
///   None: anything else.
BsmOutcome classify(const ClickPattern& pattern);

struct DetectorBank {
  DetectorModel d1h, d1v, d2h, d2v;

  static DetectorBank uniform(const DetectorModel& m) {
    DetectorBank b{m, m, m, m};
    b.d1h.label = "D1H";
    b.d1v.label = "D1V";
    b.d2h.label = "D2H";
    b.d2v.label = "D2V";
    return b;
  }
};

/// One interfering pulse at the beam splitter: mean photons, polarization of
/// the coherent (main) component, and the incoherent leaked fraction riding
/// in the orthogonal polarization (finite extinction ratio). The leak never
/// interferes and cannot be rotated away jointly with the main component.
struct BeamInput {
  double mu = 0.0;
  Jones pol{photonics::cplx(1.0), photonics::cplx(0.0)};
  double leak = 0.0;
};

/// Mean photon exposures of the four detectors for one relative carrier
/// phase phi between the interfering coherent pulses. The matched fraction
/// xi of pulse B interferes with A; the orthogonal remainder and the leaked
/// fractions add incoherently.
struct Exposures {
  double e1h = 0.0, e1v = 0.0, e2h = 0.0, e2v = 0.0;
};

Exposures bs_exposures(const BeamInput& a, const BeamInput& b, double xi, double phi);

/// Probabilities of the two accepted Bell click patterns (exactly-two-click
/// events) given the exposures and detector bank.
struct BellProbs {
  double psi_plus = 0.0;
  double psi_minus = 0.0;

  double kept() const { return psi_plus + psi_minus; }
};

BellProbs bell_probs_at_phase(const BeamInput& a, const BeamInput& b, double xi,
                              const DetectorBank& bank, double phi);

/// Phase-averaged Bell pattern probabilities (rectangle rule, n_phase points;
/// spectrally accurate for these smooth periodic integrands).
BellProbs bell_probs(const BeamInput& a, const BeamInput& b, double xi,
                     const DetectorBank& bank, std::size_t n_phase = 64);

/// Two-output-port coincidence probability at fixed relative phase.
double coincidence_prob_at_phase(const BeamInput& a, const BeamInput& b, double xi,
                                 const DetectorBank& bank, double phi);

/// Phase-averaged two-output-port coincidence probability, refined until the
/// change between grid doublings is below rel_tol (relative). Throws
/// NumericError on non-convergence.
double coincidence_prob(const BeamInput& a, const BeamInput& b, double xi,
                        const DetectorBank& bank, double rel_tol = 1e-9);

/// Dip-measurement configuration: both pulses horizontally polarized, ideal
/// extinction.
double coincidence_prob(double mu_a, double mu_b, const ModeOverlap& overlap,
                        const DetectorBank& bank, double rel_tol = 1e-9);

// ---------------------------------------------------------------------------
// HOM dip scan
// ---------------------------------------------------------------------------

struct HomScanConfig {
  PulseShape shape;
  double mu = 0.1;                   // per-pulse mean photons at the BS
  DetectorModel detector;            // applied to all four detectors
  double timing_jitter_ps = 0.0;     // per-trial residual arrival jitter (std)
  double detuning_std_khz = 0.0;     // per-trial carrier detuning (std)
  double mode_match = 1.0;           // source indistinguishability cap on xi
  double extinction_db = 0.0;        // 0 = ideal polarization
  int ensemble = 200;                // imperfection draws per delay point
  std::uint64_t seed = 1;
};

struct HomScanPoint {
  double delay_ps = 0.0;
  double coincidence = 0.0;
};

struct HomScanResult {
  std::vector<HomScanPoint> curve;
  double baseline = 0.0;
  double visibility = 0.0;
};

/// Ensemble-averaged coincidence rate across the delay list plus the dip
/// visibility 1 - min/baseline. The delay list must include a far-out
/// reference point (|tau| >= 5 FWHM) for the baseline.
HomScanResult hom_scan(const HomScanConfig& config, const std::vector<double>& delays_ps);

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// One Bell-state measurement trial: draws the relative carrier phase,
/// forms the four exposures from the (already propagated) pulses and samples
/// threshold-detector clicks.
ClickPattern bsm_trial(const PulseDescriptor& a, const PulseDescriptor& b,
                       const PulseShape& shape, const DetectorBank& bank,
                       double mode_match, RandomStream& rng);

}  // namespace combmesh::interference

#endif
