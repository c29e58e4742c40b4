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

#include "combmesh/protocol.hpp"

#include "combmesh/lp.hpp"

#include <algorithm>
#include <cmath>

namespace combmesh::protocol {

namespace {
constexpr int kMu = 0, kNu = 1, kOmega = 2, kVac = 3;
}

SiftResult sift(BsmOutcome outcome, Basis basis_a, Basis basis_b, int bit_a,
                int bit_b, bool keep_psi_plus_in_z) {
  SiftResult r;
  if (outcome == BsmOutcome::None || basis_a != basis_b) return r;
  if (basis_a == Basis::Z) {
    if (outcome == BsmOutcome::PsiPlus && !keep_psi_plus_in_z) return r;
    r.kept = true;
    r.error = (bit_a == bit_b);  // both Bell states imply anti-correlated Z bits
  } else {
    r.kept = true;
    r.error = (outcome == BsmOutcome::PsiMinus) ? (bit_a == bit_b) : (bit_a != bit_b);
  }
  return r;
}

void SiftedTally::validate() const {
  for (int ia = 0; ia < kIntensities; ++ia) {
    for (int ib = 0; ib < kIntensities; ++ib) {
      for (Basis b : {Basis::Z, Basis::X}) {
        const Cell& c = cell(ia, ib, b);
        if (c.sent < 0.0 || c.kept < 0.0 || c.errors < 0.0 || c.errors > c.kept + 1e-9 ||
            c.kept > c.sent + 1e-9) {
          throw ContractError("SiftedTally: cell counts violate 0 <= m <= n <= N");
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Chernoff bounds: tail exponent g(E) = k ln(E/k) + k - E for observation k,
// the classic multiplicative bound P[tail] <= exp(g). Roots are bracketed
// and bisected; g is monotone on each side of E = k.
// ---------------------------------------------------------------------------

namespace {

double tail_exponent(double k, double e) {
  if (k == 0.0) return -e;
  return k * std::log(e / k) + k - e;
}

double bisect_upper(double k, double target) {
  // root in (k, inf): g decreasing from 0 to -inf
  double lo = std::fmax(k, 1e-300);
  double hi = k - target + std::sqrt(-2.0 * target * std::fmax(k, 1.0)) + 1.0;
  while (tail_exponent(k, hi) > target) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (tail_exponent(k, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * hi) break;
  }
  return 0.5 * (lo + hi);
}

double bisect_lower(double k, double target) {
  // root in (0, k): g increasing from -inf to 0
  double hi = k;
  double lo = k * std::exp((target - k) / k);  // g(lo) <= target by construction
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (tail_exponent(k, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * std::fmax(hi, 1.0)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ChernoffInterval chernoff_bounds(double observed, double epsilon) {
  if (observed < 0.0) throw ContractError("chernoff_bounds: negative count");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ContractError("chernoff_bounds: epsilon out of (0,1)");
  }
  const double target = std::log(epsilon / 2.0);
  ChernoffInterval out;
  out.upper = bisect_upper(observed, target);
  out.lower = observed > 0.0 ? bisect_lower(observed, target) : 0.0;
  if (!(out.lower <= observed && observed <= out.upper)) {
    throw NumericError("chernoff_bounds: root finding produced an invalid interval");
  }
  return out;
}

double chernoff_realization_lower(double expectation, double epsilon) {
  if (expectation < 0.0) throw ContractError("chernoff_realization_lower: negative expectation");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ContractError("chernoff_realization_lower: epsilon out of (0,1)");
  }
  const double target = std::log(epsilon);
  if (expectation == 0.0 || -expectation > target) return 0.0;
  // h(x) = x ln(E/x) + x - E increases from -E at x->0 to 0 at x = E.
  double lo = 0.0, hi = expectation;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (tail_exponent(mid, expectation) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * std::fmax(hi, 1.0)) break;
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Decoy estimation
// ---------------------------------------------------------------------------

namespace {

struct Interval {
  double lo = 0.0, hi = 0.0;
};

Interval gain_interval(const SiftedTally& tally, int ia, int ib,
                       const FiniteKeyParams& p, bool errors, int uses) {
  const auto& c = tally.cell(ia, ib, Basis::X);
  if (c.sent <= 0.0) {
    throw ContractError("decoy estimator: required X-basis cell has no sent pairs");
  }
  const double k = errors ? c.errors : c.kept;
  if (p.asymptotic) {
    const double q = k / c.sent;
    return {q, q};
  }
  const ChernoffInterval ci = chernoff_bounds(k, p.eps_bound(uses));
  return {ci.lower / c.sent, ci.upper / c.sent};
}

constexpr int kAnalyticUses = 12;  // 7 gains + 4 error gains + 1 realized count
constexpr int kJointUses = 10;     // 6 pooled gains + 3 pooled errors + 1 count

double poisson_p1(double mu) { return mu * std::exp(-mu); }

}  // namespace

DecoyEstimate AnalyticTwoDecoyEstimator::estimate(const SiftedTally& tally,
                                                  const IntensitySet& intensities,
                                                  const FiniteKeyParams& params) const {
  intensities.validate();
  params.validate();
  tally.validate();

  const double mu = intensities.intensities[kMu];
  const double nu = intensities.intensities[kNu];
  const double om = intensities.intensities[kOmega];
  if (!(nu > om && om > 0.0)) {
    throw ContractError("decoy estimator: needs two nonzero decoys with nu > omega");
  }

  const Interval q_nn = gain_interval(tally, kNu, kNu, params, false, kAnalyticUses);
  const Interval q_n0 = gain_interval(tally, kNu, kVac, params, false, kAnalyticUses);
  const Interval q_0n = gain_interval(tally, kVac, kNu, params, false, kAnalyticUses);
  const Interval q_oo = gain_interval(tally, kOmega, kOmega, params, false, kAnalyticUses);
  const Interval q_o0 = gain_interval(tally, kOmega, kVac, params, false, kAnalyticUses);
  const Interval q_0o = gain_interval(tally, kVac, kOmega, params, false, kAnalyticUses);
  const Interval q_00 = gain_interval(tally, kVac, kVac, params, false, kAnalyticUses);

  const double nu3 = nu * nu * nu;
  const double om3 = om * om * om;
  const double e_om = std::exp(om), e_2om = std::exp(2.0 * om);
  const double e_nu = std::exp(nu), e_2nu = std::exp(2.0 * nu);

  DecoyEstimate out;

  // Worst-case linear combination of the interval endpoints per term sign.
  const double numerator = nu3 * e_2om * q_oo.lo - nu3 * e_om * (q_o0.hi + q_0o.hi) +
                           (nu3 - om3) * q_00.lo - om3 * e_2nu * q_nn.hi +
                           om3 * e_nu * (q_n0.lo + q_0n.lo);
  const double denom = nu * nu * om * om * (nu - om);
  double y11 = numerator / denom;
  if (y11 <= 0.0) {
    out.y11_lower = 0.0;
    out.e11_upper = 0.5;
    out.n11_lower = 0.0;
    out.feasible = false;
    out.diagnostic = "single-photon yield bound not positive at these statistics";
    return out;
  }
  out.y11_lower = std::min(y11, 1.0);

  const Interval t_oo = gain_interval(tally, kOmega, kOmega, params, true, kAnalyticUses);
  const Interval t_o0 = gain_interval(tally, kOmega, kVac, params, true, kAnalyticUses);
  const Interval t_0o = gain_interval(tally, kVac, kOmega, params, true, kAnalyticUses);
  const Interval t_00 = gain_interval(tally, kVac, kVac, params, true, kAnalyticUses);

  const double err_num = e_2om * t_oo.hi - e_om * (t_o0.lo + t_0o.lo) + t_00.hi;
  out.e11_upper = std::clamp(err_num / (om * om * out.y11_lower), 0.0, 0.5);

  const auto& zz = tally.cell(kMu, kMu, Basis::Z);
  const double p1 = poisson_p1(mu);
  const double n11_mean = zz.sent * p1 * p1 * out.y11_lower;
  out.n11_lower = params.asymptotic
                      ? n11_mean
                      : chernoff_realization_lower(n11_mean, params.eps_bound(kAnalyticUses));
  return out;
}

namespace {

// Poisson pmf values P_0..P_c and the joint truncation tail for a cell.
std::vector<double> poisson_pmf(double mu, int cutoff) {
  std::vector<double> p(static_cast<std::size_t>(cutoff) + 1);
  double v = std::exp(-mu);
  for (int k = 0; k <= cutoff; ++k) {
    p[static_cast<std::size_t>(k)] = v;
    v *= mu / (k + 1);
  }
  return p;
}

double pmf_mass(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

}  // namespace

DecoyEstimate JointLpEstimator::estimate(const SiftedTally& tally,
                                         const IntensitySet& intensities,
                                         const FiniteKeyParams& params) const {
  intensities.validate();
  params.validate();
  tally.validate();

  const int c = cutoff_;
  const int side = c + 1;
  const int ny = side * side;
  auto yi = [side](int m, int n) { return m * side + n; };
  auto zi = [side, ny](int m, int n) { return ny + m * side + n; };

  const double mu = intensities.intensities[kMu];
  const std::array<int, 3> xint = {kNu, kOmega, kVac};
  std::array<std::vector<double>, 4> pmf;
  std::array<double, 4> mass{};
  for (int i : xint) {
    pmf[static_cast<std::size_t>(i)] =
        poisson_pmf(intensities.intensities[static_cast<std::size_t>(i)], c);
    mass[static_cast<std::size_t>(i)] = pmf_mass(pmf[static_cast<std::size_t>(i)]);
  }

  lp::Problem prob;
  prob.num_vars = 2 * ny;

  // Mirror-symmetric cells are pooled into one constraint: their counts add
  // (still a sum of independent Bernoulli trials, so the same concentration
  // bound applies) and the union budget shrinks.
  using CellGroup = std::vector<std::pair<int, int>>;
  auto add_group_rows = [&](const CellGroup& group, bool errors) {
    double kcount = 0.0, sent = 0.0, tail = 0.0;
    for (const auto& [ia, ib] : group) {
      const auto& cell = tally.cell(ia, ib, Basis::X);
      if (cell.sent <= 0.0) {
        throw ContractError("decoy estimator: required X-basis cell has no sent pairs");
      }
      kcount += errors ? cell.errors : cell.kept;
      sent += cell.sent;
    }
    Interval q;
    if (params.asymptotic) {
      q = {kcount / sent, kcount / sent};
    } else {
      const ChernoffInterval ci = chernoff_bounds(kcount, params.eps_bound(kJointUses));
      q = {ci.lower / sent, ci.upper / sent};
    }

    std::vector<double> coefs(static_cast<std::size_t>(ny), 0.0);
    for (const auto& [ia, ib] : group) {
      const double w = tally.cell(ia, ib, Basis::X).sent / sent;
      const auto& pa = pmf[static_cast<std::size_t>(ia)];
      const auto& pb = pmf[static_cast<std::size_t>(ib)];
      for (int m = 0; m <= c; ++m) {
        for (int n = 0; n <= c; ++n) {
          coefs[static_cast<std::size_t>(m * side + n)] +=
              w * pa[static_cast<std::size_t>(m)] * pb[static_cast<std::size_t>(n)];
        }
      }
      tail += w * (1.0 -
                   mass[static_cast<std::size_t>(ia)] * mass[static_cast<std::size_t>(ib)]);
    }

    lp::Row lo, hi;
    for (int m = 0; m <= c; ++m) {
      for (int n = 0; n <= c; ++n) {
        const double coef = coefs[static_cast<std::size_t>(m * side + n)];
        const int idx = errors ? zi(m, n) : yi(m, n);
        lo.coeffs.push_back({idx, coef});
      }
    }
    hi.coeffs = lo.coeffs;
    lo.type = lp::RowType::GreaterEqual;
    lo.rhs = std::fmax(0.0, q.lo - tail);
    hi.type = lp::RowType::LessEqual;
    hi.rhs = q.hi;
    prob.rows.push_back(std::move(lo));
    prob.rows.push_back(std::move(hi));
  };

  const std::vector<CellGroup> gain_groups = {
      {{kNu, kNu}},          {{kOmega, kOmega}},     {{kVac, kVac}},
      {{kNu, kOmega}, {kOmega, kNu}},
      {{kNu, kVac}, {kVac, kNu}},
      {{kOmega, kVac}, {kVac, kOmega}},
  };
  const std::vector<CellGroup> error_groups = {
      {{kNu, kNu}},
      {{kOmega, kOmega}},
      {{kNu, kOmega}, {kOmega, kNu}},
  };
  for (const auto& g : gain_groups) add_group_rows(g, false);
  for (const auto& g : error_groups) add_group_rows(g, true);

  for (int m = 0; m <= c; ++m) {
    for (int n = 0; n <= c; ++n) {
      // error yield cannot exceed the yield
      prob.rows.push_back({{{zi(m, n), 1.0}, {yi(m, n), -1.0}}, lp::RowType::LessEqual, 0.0});
      // yields are probabilities
      prob.rows.push_back({{{yi(m, n), 1.0}}, lp::RowType::LessEqual, 1.0});
    }
  }
  // A vacuum sender's declared bit is uniform and independent of the clicks,
  // so those cells' error rate is exactly one half.
  for (int m = 0; m <= c; ++m) {
    prob.rows.push_back({{{zi(m, 0), 1.0}, {yi(m, 0), -0.5}}, lp::RowType::Equal, 0.0});
  }
  for (int n = 1; n <= c; ++n) {
    prob.rows.push_back({{{zi(0, n), 1.0}, {yi(0, n), -0.5}}, lp::RowType::Equal, 0.0});
  }

  DecoyEstimate out;

  prob.objective = {{yi(1, 1), 1.0}};
  prob.maximize = false;
  const lp::Solution y_sol = lp::solve(prob);
  if (y_sol.status != lp::Status::Optimal || y_sol.value <= 0.0) {
    out.y11_lower = 0.0;
    out.e11_upper = 0.5;
    out.n11_lower = 0.0;
    out.feasible = false;
    out.diagnostic = y_sol.status == lp::Status::Optimal
                         ? "single-photon yield bound not positive at these statistics"
                         : "yield constraint set infeasible at these statistics";
    return out;
  }
  out.y11_lower = std::min(y_sol.value, 1.0);

  // Worst-case error ratio sup Z11/Y11 over the feasible set, by bisection:
  // the ratio exceeds t iff max(Z11 - t Y11) >= 0. Tighter than dividing the
  // separate extremes, since Z11 <= Y11 couples the two inside the set.
  double lo_t = 0.0, hi_t = 0.5;
  prob.maximize = true;
  for (int it = 0; it < 20; ++it) {
    const double t = 0.5 * (lo_t + hi_t);
    prob.objective = {{zi(1, 1), 1.0}, {yi(1, 1), -t}};
    const lp::Solution s = lp::solve(prob);
    if (s.status == lp::Status::Optimal && s.value >= 0.0) {
      lo_t = t;
    } else if (s.status == lp::Status::Optimal) {
      hi_t = t;
    } else {
      lo_t = hi_t = 0.5;  // solver trouble: fall back to the conservative cap
      break;
    }
  }
  out.e11_upper = std::clamp(hi_t, 0.0, 0.5);

  const auto& zz = tally.cell(kMu, kMu, Basis::Z);
  const double p1 = poisson_p1(mu);
  const double n11_mean = zz.sent * p1 * p1 * out.y11_lower;
  out.n11_lower = params.asymptotic
                      ? n11_mean
                      : chernoff_realization_lower(n11_mean, params.eps_bound(kJointUses));
  return out;
}

DecoyEstimate estimate_single_photon(const SiftedTally& tally,
                                     const IntensitySet& intensities,
                                     const FiniteKeyParams& params) {
  return AnalyticTwoDecoyEstimator{}.estimate(tally, intensities, params);
}

DecoyEstimate run_estimator(const SiftedTally& tally, const IntensitySet& intensities,
                            const FiniteKeyParams& params) {
  if (params.estimator == EstimatorKind::JointLp) {
    return JointLpEstimator{}.estimate(tally, intensities, params);
  }
  return AnalyticTwoDecoyEstimator{}.estimate(tally, intensities, params);
}

// ---------------------------------------------------------------------------
// Key length
// ---------------------------------------------------------------------------

double binary_entropy(double x) {
  if (x < 0.0 || x > 1.0) throw ContractError("binary_entropy: argument outside [0,1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

KeyReport key_length(const DecoyEstimate& estimate, const SiftedTally& tally,
                     const FiniteKeyParams& params) {
  params.validate();
  tally.validate();

  KeyReport report;
  report.accumulation_s = tally.accumulation_s;

  const auto& zz = tally.cell(kMu, kMu, Basis::Z);
  report.qber_z = zz.kept > 0.0 ? zz.errors / zz.kept : 0.0;

  double xk = 0.0, xe = 0.0;
  for (int ia : {kNu, kOmega}) {
    for (int ib : {kNu, kOmega}) {
      const auto& c = tally.cell(ia, ib, Basis::X);
      xk += c.kept;
      xe += c.errors;
    }
  }
  report.qber_x = xk > 0.0 ? xe / xk : 0.0;

  if (zz.kept <= 0.0) {
    report.feasible = false;
    report.diagnostic = "no kept key-basis events";
    return report;
  }
  if (!estimate.feasible) {
    report.feasible = false;
    report.diagnostic = estimate.diagnostic;
    return report;
  }

  double l = estimate.n11_lower * (1.0 - binary_entropy(estimate.e11_upper)) -
             params.f_ec * zz.kept * binary_entropy(report.qber_z);
  if (!params.asymptotic) {
    l -= std::log2(2.0 / params.eps_correctness());
    l -= 2.0 * std::log2(1.0 / params.eps_pa());
  }
  report.key_length_bits = std::fmax(0.0, l);
  report.key_rate_bps =
      tally.accumulation_s > 0.0 ? report.key_length_bits / tally.accumulation_s : 0.0;
  if (report.key_length_bits == 0.0) {
    report.diagnostic = "key length clamped to zero";
  }
  return report;
}

std::vector<RatePoint> asymptotic_rate(
    const std::function<SiftedTally(double)>& expected_tally_at_km,
    const IntensitySet& intensities, const FiniteKeyParams& params,
    const std::vector<double>& distances_km) {
  FiniteKeyParams asym = params;
  asym.asymptotic = true;
  std::vector<RatePoint> out;
  out.reserve(distances_km.size());
  for (double d : distances_km) {
    const SiftedTally tally = expected_tally_at_km(d);
    const DecoyEstimate est = run_estimator(tally, intensities, asym);
    const KeyReport rep = key_length(est, tally, asym);
    out.push_back({d, rep.key_rate_bps});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coordinate descent over intensities and probabilities
// ---------------------------------------------------------------------------

namespace {

IntensitySet with_probs(IntensitySet s, double pmu, double pnu, double pom) {
  const double pv = 1.0 - pmu - pnu - pom;
  s.send_probabilities = {pmu, pnu, pom, pv};
  return s;
}

}  // namespace

IntensityOptimum optimize_intensities(
    const std::function<double(const IntensitySet&)>& rate_of, IntensitySet initial,
    int sweeps) {
  initial.validate();
  IntensityOptimum best{initial, rate_of(initial), 1};

  // Coordinates: mu, nu, omega, p_mu, p_nu, p_omega. Multiplicative probes
  // with a shrinking step ladder; infeasible probes are skipped.
  double step = 0.25;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    bool improved = false;
    for (int coord = 0; coord < 6; ++coord) {
      for (double dir : {1.0 + step, 1.0 / (1.0 + step)}) {
        IntensitySet trial = best.set;
        switch (coord) {
          case 0: trial.intensities[0] *= dir; break;
          case 1: trial.intensities[1] *= dir; break;
          case 2: trial.intensities[2] *= dir; break;
          case 3:
            trial = with_probs(trial, trial.send_probabilities[0] * dir,
                               trial.send_probabilities[1], trial.send_probabilities[2]);
            break;
          case 4:
            trial = with_probs(trial, trial.send_probabilities[0],
                               trial.send_probabilities[1] * dir,
                               trial.send_probabilities[2]);
            break;
          case 5:
            trial = with_probs(trial, trial.send_probabilities[0],
                               trial.send_probabilities[1],
                               trial.send_probabilities[2] * dir);
            break;
        }
        if (trial.send_probabilities[3] < 0.005) continue;
        try {
          trial.validate();
        } catch (const ContractError&) {
          continue;
        }
        ++best.evaluations;
        const double r = rate_of(trial);
        if (r > best.rate_bps) {
          best.rate_bps = r;
          best.set = trial;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
    if (step < 0.01) break;
  }
  return best;
}

}  // namespace combmesh::protocol
