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

#ifndef COMBMESH_PROTOCOL_HPP
#define COMBMESH_PROTOCOL_HPP

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "combmesh/interference.hpp"
#include "combmesh/photonics.hpp"

namespace combmesh::protocol {

using interference::BsmOutcome;
using photonics::Basis;
using photonics::IntensitySet;

// ---------------------------------------------------------------------------
// Sifting
// ---------------------------------------------------------------------------

struct SiftResult {
  bool kept = false;
  bool error = false;
};

/// Post-processing rule applied to one announced BSM outcome. Events are kept
/// when the outcome is a Bell state and the declared bases match. Bit
/// reconciliation: in Z both outcomes imply anti-correlated bits; in X,
/// PsiMinus implies anti-correlated and PsiPlus correlated bits.
SiftResult sift(BsmOutcome outcome, Basis basis_a, Basis basis_b, int bit_a,
                int bit_b, bool keep_psi_plus_in_z = true);

// ---------------------------------------------------------------------------
// Tally
// ---------------------------------------------------------------------------

/// Per-(intensity_a, intensity_b, basis) counts of sent pairs, kept BSM
/// events and sifted errors. Counts are stored as doubles so that expected
/// (analytic) tallies and scaled Monte Carlo tallies share the structure;
/// raw Monte Carlo tallies hold exact integers.
class SiftedTally {
 public:
  struct Cell {
    double sent = 0.0;
    double kept = 0.0;
    double errors = 0.0;
  };

  static constexpr int kIntensities = 4;  // mu, nu, omega, vacuum

  Cell& cell(int ia, int ib, Basis basis) { return cells_[index(ia, ib, basis)]; }
  const Cell& cell(int ia, int ib, Basis basis) const { return cells_[index(ia, ib, basis)]; }

  void record_sent(int ia, int ib, Basis basis, double weight = 1.0) {
    cell(ia, ib, basis).sent += weight;
  }
  void record_kept(int ia, int ib, Basis basis, bool error, double weight = 1.0) {
    Cell& c = cell(ia, ib, basis);
    c.kept += weight;
    if (error) c.errors += weight;
  }

  /// Cell-wise addition; shards merge associatively.
  void merge(const SiftedTally& other) {
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      cells_[i].sent += other.cells_[i].sent;
      cells_[i].kept += other.cells_[i].kept;
      cells_[i].errors += other.cells_[i].errors;
    }
  }

  /// Multiply all counts (Monte Carlo extrapolation to a full block).
  void scale(double factor) {
    for (auto& c : cells_) {
      c.sent *= factor;
      c.kept *= factor;
      c.errors *= factor;
    }
  }

  /// 0 <= errors <= kept <= sent for every cell.
  void validate() const;

  double accumulation_s = 0.0;
  double clock_hz = 0.0;

 private:
  static std::size_t index(int ia, int ib, Basis basis) {
    if (ia < 0 || ia >= kIntensities || ib < 0 || ib >= kIntensities) {
      throw ContractError("SiftedTally: intensity index out of range");
    }
    return static_cast<std::size_t>((ia * kIntensities + ib) * 2 +
                                    (basis == Basis::X ? 1 : 0));
  }

  std::array<Cell, kIntensities * kIntensities * 2> cells_{};
};

// ---------------------------------------------------------------------------
// Finite-key parameters and concentration bounds
// ---------------------------------------------------------------------------

enum class EstimatorKind : std::uint8_t { AnalyticTwoDecoy, JointLp };

struct FiniteKeyParams {
  double epsilon_total = 1e-10;
  double f_ec = 1.16;
  bool asymptotic = false;  // identity bounds, no log-correction terms
  EstimatorKind estimator = EstimatorKind::JointLp;

  // Budget partition: fixed correctness and privacy-amplification shares,
  // the remainder split equally across the estimator's concentration-bound
  // uses (12 for the analytic estimator, 10 for the pooled joint one).
  double eps_correctness() const { return 0.1 * epsilon_total; }
  double eps_pa() const { return 0.1 * epsilon_total; }
  double eps_bound(int uses) const { return 0.8 * epsilon_total / uses; }

  void validate() const {
    if (epsilon_total <= 0.0 || epsilon_total >= 1.0) {
      throw ContractError("FiniteKeyParams: epsilon_total out of (0,1)");
    }
    if (f_ec < 1.0) throw ContractError("FiniteKeyParams: f_ec must be >= 1");
  }
};

struct ChernoffInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Two-sided Chernoff interval for the expectation of a sum of independent
/// Bernoulli/Poisson trials given the observed count. Each tail consumes
/// epsilon/2; the roots of the tail exponent are found numerically.
ChernoffInterval chernoff_bounds(double observed, double epsilon);

/// Largest count k such that P[X <= k] <= epsilon when E[X] = expectation;
/// lower-bounds the realized count from a bounded expectation.
double chernoff_realization_lower(double expectation, double epsilon);

// ---------------------------------------------------------------------------
// Decoy-state estimation
// ---------------------------------------------------------------------------

struct DecoyEstimate {
  double y11_lower = 0.0;
  double e11_upper = 0.5;
  double n11_lower = 0.0;
  bool feasible = true;
  std::string diagnostic;
};

/// Estimator interface; the analytic two-decoy variant ships, alternative
/// bound families can be slotted in behind it.
class DecoyEstimator {
 public:
  virtual ~DecoyEstimator() = default;
  virtual DecoyEstimate estimate(const SiftedTally& tally, const IntensitySet& intensities,
                                 const FiniteKeyParams& params) const = 0;
};

/// Standard analytic two-decoy bounds with Chernoff-corrected X-basis gains:
/// Poisson photon-number statistics, vacuum + two decoy intensities.
class AnalyticTwoDecoyEstimator : public DecoyEstimator {
 public:
  DecoyEstimate estimate(const SiftedTally& tally, const IntensitySet& intensities,
                         const FiniteKeyParams& params) const override;
};

/// Joint estimator: a linear program over the truncated photon-number yield
/// space, constrained by the Chernoff intervals of every X-basis cell, with
/// vacuum error rates pinned at 1/2 (the declared bit of an empty pulse is a
/// coin flip). Strictly tighter than the per-term analytic bound, which pays
/// the worst case of each cell independently; the difference dominates at
/// short accumulation blocks.
class JointLpEstimator : public DecoyEstimator {
 public:
  explicit JointLpEstimator(int cutoff = 6) : cutoff_(cutoff) {}
  DecoyEstimate estimate(const SiftedTally& tally, const IntensitySet& intensities,
                         const FiniteKeyParams& params) const override;

 private:
  int cutoff_;
};

/// Convenience wrapper over AnalyticTwoDecoyEstimator.
DecoyEstimate estimate_single_photon(const SiftedTally& tally,
                                     const IntensitySet& intensities,
                                     const FiniteKeyParams& params);

/// Estimator selected by the finite-key parameters.
DecoyEstimate run_estimator(const SiftedTally& tally, const IntensitySet& intensities,
                            const FiniteKeyParams& params);

// ---------------------------------------------------------------------------
// Key length
// ---------------------------------------------------------------------------

struct KeyReport {
  std::string channel = "CH0";
  double qber_z = 0.0;
  double qber_x = 0.0;
  double key_length_bits = 0.0;
  double key_rate_bps = 0.0;
  double accumulation_s = 0.0;
  bool feasible = true;
  std::string diagnostic;
};

/// Finite-size secure key length
///   l = n11 (1 - H2(e11)) - f_ec nZ H2(EZ) - log2(2/eps_cor) - 2 log2(1/eps_pa)
/// clamped at zero; in asymptotic mode the log-correction terms are dropped.
KeyReport key_length(const DecoyEstimate& estimate, const SiftedTally& tally,
                     const FiniteKeyParams& params);

/// Binary Shannon entropy with H2(0) = H2(1) = 0. Domain-checked.
double binary_entropy(double x);

// ---------------------------------------------------------------------------
// Asymptotic rate curve and intensity optimization
// ---------------------------------------------------------------------------

struct RatePoint {
  double distance_km = 0.0;
  double rate_bps = 0.0;
};

/// Asymptotic (infinite-block, no concentration corrections) key rate over a
/// distance grid. The caller supplies the expected-tally generator for one
/// accumulation block at a given distance.
std::vector<RatePoint> asymptotic_rate(
    const std::function<SiftedTally(double)>& expected_tally_at_km,
    const IntensitySet& intensities, const FiniteKeyParams& params,
    const std::vector<double>& distances_km);

/// Coordinate-descent maximization of a key-rate functional over the decoy
/// intensities and send probabilities. Used to fit calibration profiles.
struct IntensityOptimum {
  IntensitySet set;
  double rate_bps = 0.0;
  int evaluations = 0;
};

IntensityOptimum optimize_intensities(
    const std::function<double(const IntensitySet&)>& rate_of, IntensitySet initial,
    int sweeps = 8);

}  // namespace combmesh::protocol

#endif
