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

#include "combmesh/interference.hpp"

#include <algorithm>
#include <cmath>

#include "combmesh/quadrature.hpp"

namespace combmesh::interference {

using photonics::click_probability;
using photonics::cplx;

ModeOverlap mode_overlap(const PulseShape& shape, double tau_ps, double delta_nu_khz) {
  shape.validate();
  const double sigma_s = shape.sigma_ps() * 1e-12;
  const double tau_s = tau_ps * 1e-12;
  const double dnu_hz = delta_nu_khz * 1e3;
  const double t_term = tau_s * tau_s / (8.0 * sigma_s * sigma_s);
  const double f_term = 2.0 * M_PI * M_PI * dnu_hz * dnu_hz * sigma_s * sigma_s;
  return {std::exp(-(t_term + f_term))};
}

BsmOutcome classify(const ClickPattern& p) {
  if (p.count() != 2) return BsmOutcome::None;
  if ((p.d1h && p.d2v) || (p.d1v && p.d2h)) return BsmOutcome::PsiMinus;
  if ((p.d1h && p.d1v) || (p.d2h && p.d2v)) return BsmOutcome::PsiPlus;
  return BsmOutcome::None;  // same-polarization cross-port pairs
}

namespace {

photonics::Jones orthogonal(const photonics::Jones& j) {
  return {-std::conj(j.v), std::conj(j.h)};
}

}  // namespace

Exposures bs_exposures(const BeamInput& a, const BeamInput& b, double xi, double phi) {
  const double x = std::clamp(xi, 0.0, 1.0);
  const double ra = std::sqrt(std::fmax(0.0, a.mu * (1.0 - a.leak)));
  const double rb = std::sqrt(std::fmax(0.0, b.mu * (1.0 - b.leak)));
  const cplx ph(std::cos(phi), std::sin(phi));
  const cplx ah = ra * a.pol.h, av = ra * a.pol.v;
  const cplx bh = rb * ph * b.pol.h, bv = rb * ph * b.pol.v;
  const double orth = 0.5 * (1.0 - x * x);

  Exposures e;
  e.e1h = 0.5 * std::norm(ah + x * bh) + orth * std::norm(bh);
  e.e2h = 0.5 * std::norm(ah - x * bh) + orth * std::norm(bh);
  e.e1v = 0.5 * std::norm(av + x * bv) + orth * std::norm(bv);
  e.e2v = 0.5 * std::norm(av - x * bv) + orth * std::norm(bv);

  // Extinction leakage: incoherent power in the orthogonal polarization,
  // split evenly between the output ports.
  if (a.leak > 0.0) {
    const photonics::Jones oa = orthogonal(a.pol);
    const double pw = 0.5 * a.mu * a.leak;
    e.e1h += pw * std::norm(oa.h);
    e.e2h += pw * std::norm(oa.h);
    e.e1v += pw * std::norm(oa.v);
    e.e2v += pw * std::norm(oa.v);
  }
  if (b.leak > 0.0) {
    const photonics::Jones ob = orthogonal(b.pol);
    const double pw = 0.5 * b.mu * b.leak;
    e.e1h += pw * std::norm(ob.h);
    e.e2h += pw * std::norm(ob.h);
    e.e1v += pw * std::norm(ob.v);
    e.e2v += pw * std::norm(ob.v);
  }
  return e;
}

namespace {

struct ClickProbs {
  double p1h, p1v, p2h, p2v;
};

ClickProbs clicks_at_phase(const BeamInput& a, const BeamInput& b, double xi,
                           const DetectorBank& bank, double phi) {
  const Exposures e = bs_exposures(a, b, xi, phi);
  return {click_probability(e.e1h, bank.d1h), click_probability(e.e1v, bank.d1v),
          click_probability(e.e2h, bank.d2h), click_probability(e.e2v, bank.d2v)};
}

}  // namespace

BellProbs bell_probs_at_phase(const BeamInput& a, const BeamInput& b, double xi,
                              const DetectorBank& bank, double phi) {
  const ClickProbs c = clicks_at_phase(a, b, xi, bank, phi);
  BellProbs out;
  out.psi_minus = c.p1h * c.p2v * (1.0 - c.p1v) * (1.0 - c.p2h) +
                  c.p1v * c.p2h * (1.0 - c.p1h) * (1.0 - c.p2v);
  out.psi_plus = c.p1h * c.p1v * (1.0 - c.p2h) * (1.0 - c.p2v) +
                 c.p2h * c.p2v * (1.0 - c.p1h) * (1.0 - c.p1v);
  return out;
}

BellProbs bell_probs(const BeamInput& a, const BeamInput& b, double xi,
                     const DetectorBank& bank, std::size_t n_phase) {
  BellProbs acc;
  const double h = kTwoPi / static_cast<double>(n_phase);
  for (std::size_t i = 0; i < n_phase; ++i) {
    const BellProbs p = bell_probs_at_phase(a, b, xi, bank, h * static_cast<double>(i));
    acc.psi_plus += p.psi_plus;
    acc.psi_minus += p.psi_minus;
  }
  acc.psi_plus /= static_cast<double>(n_phase);
  acc.psi_minus /= static_cast<double>(n_phase);
  return acc;
}

double coincidence_prob_at_phase(const BeamInput& a, const BeamInput& b, double xi,
                                 const DetectorBank& bank, double phi) {
  const ClickProbs c = clicks_at_phase(a, b, xi, bank, phi);
  return (1.0 - (1.0 - c.p1h) * (1.0 - c.p1v)) * (1.0 - (1.0 - c.p2h) * (1.0 - c.p2v));
}

double coincidence_prob(const BeamInput& a, const BeamInput& b, double xi,
                        const DetectorBank& bank, double rel_tol) {
  return periodic_mean(
      [&](double phi) { return coincidence_prob_at_phase(a, b, xi, bank, phi); }, rel_tol);
}

double coincidence_prob(double mu_a, double mu_b, const ModeOverlap& overlap,
                        const DetectorBank& bank, double rel_tol) {
  const BeamInput a{mu_a, {1.0, 0.0}, 0.0};
  const BeamInput b{mu_b, {1.0, 0.0}, 0.0};
  return coincidence_prob(a, b, overlap.xi, bank, rel_tol);
}

HomScanResult hom_scan(const HomScanConfig& config, const std::vector<double>& delays_ps) {
  config.shape.validate();
  const double far = 5.0 * config.shape.fwhm_ps;
  bool has_baseline = false;
  for (double d : delays_ps) has_baseline |= std::fabs(d) >= far;
  if (!has_baseline) {
    throw ContractError("hom_scan: delay list lacks a far-out baseline point (|tau| >= 5 FWHM)");
  }

  const DetectorBank bank = DetectorBank::uniform(config.detector);
  const double leak = config.extinction_db > 0.0
                          ? photonics::polarization_error_floor(config.extinction_db)
                          : 0.0;
  RandomStream rng(config.seed);

  HomScanResult out;
  out.curve.reserve(delays_ps.size());
  const int ensemble = std::max(1, config.ensemble);

  const BeamInput in_a{config.mu, {1.0, 0.0}, leak};
  const BeamInput in_b = in_a;

  for (double delay : delays_ps) {
    double acc = 0.0;
    for (int k = 0; k < ensemble; ++k) {
      const double tau = delay + (config.timing_jitter_ps > 0.0
                                      ? rng.normal(0.0, config.timing_jitter_ps)
                                      : 0.0);
      const double dnu = config.detuning_std_khz > 0.0
                             ? rng.normal(0.0, config.detuning_std_khz)
                             : 0.0;
      const double xi = config.mode_match * mode_overlap(config.shape, tau, dnu).xi;
      acc += coincidence_prob(in_a, in_b, xi, bank, 1e-9);
    }
    out.curve.push_back({delay, acc / ensemble});
  }

  double base_acc = 0.0;
  int base_n = 0;
  double dip = out.curve.front().coincidence;
  for (const auto& pt : out.curve) {
    if (std::fabs(pt.delay_ps) >= far) {
      base_acc += pt.coincidence;
      ++base_n;
    }
    dip = std::min(dip, pt.coincidence);
  }
  out.baseline = base_acc / base_n;
  out.visibility = out.baseline > 0.0 ? 1.0 - dip / out.baseline : 0.0;
  return out;
}

ClickPattern bsm_trial(const PulseDescriptor& a, const PulseDescriptor& b,
                       const PulseShape& shape, const DetectorBank& bank,
                       double mode_match, RandomStream& rng) {
  const double tau = a.time_offset_ps - b.time_offset_ps;
  const double dnu = a.carrier_detuning_khz - b.carrier_detuning_khz;
  const double xi = mode_match * mode_overlap(shape, tau, dnu).xi;
  const double phi = kTwoPi * rng.u01();
  const BeamInput ba{a.mean_photons, a.polarization, a.leak_fraction};
  const BeamInput bb{b.mean_photons, b.polarization, b.leak_fraction};
  const Exposures e = bs_exposures(ba, bb, xi, phi);

  ClickPattern p;
  p.d1h = rng.bernoulli(click_probability(e.e1h, bank.d1h));
  p.d1v = rng.bernoulli(click_probability(e.e1v, bank.d1v));
  p.d2h = rng.bernoulli(click_probability(e.e2h, bank.d2h));
  p.d2v = rng.bernoulli(click_probability(e.e2v, bank.d2v));
  return p;
}

}  // namespace combmesh::interference
