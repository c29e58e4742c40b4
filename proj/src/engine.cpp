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

#include "combmesh/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "combmesh/quadrature.hpp"

namespace combmesh::engine {

using interference::bell_probs;
using interference::BellProbs;
using interference::BsmOutcome;
using interference::DetectorBank;
using photonics::Basis;
using photonics::Jones;
using photonics::Unitary2;
using protocol::SiftedTally;

void Scenario::validate() const {
  plan.validate();
  jitter_a.validate();
  jitter_b.validate();
  shape.validate();
  intensities.validate();
  channel_a.validate();
  channel_b.validate();
  detector.validate();
  finite_key.validate();
  if (extinction_db <= 0.0) throw ContractError("Scenario: extinction ratio must be positive");
  if (mode_match <= 0.0 || mode_match > 1.0) {
    throw ContractError("Scenario: mode match must be in (0,1]");
  }
  if (accumulation_s <= 0.0) throw ContractError("Scenario: accumulation time must be positive");
  if (mode == RunMode::MonteCarlo && pulse_budget < 1e4) {
    throw ContractError("Scenario: Monte Carlo pulse budget must be at least 1e4");
  }
  if (shards < 1 || threads < 1) throw ContractError("Scenario: shards and threads must be >= 1");
}

double effective_overlap(const Scenario& s) {
  const double sigma_s = s.shape.sigma_ps() * 1e-12;
  const double st = s.timing_residual_ps * 1e-12;
  const double sv = std::sqrt(s.jitter_a.single_laser_std_khz * s.jitter_a.single_laser_std_khz +
                              s.jitter_b.single_laser_std_khz * s.jitter_b.single_laser_std_khz) *
                    1e3;
  // E[exp(-a x^2)] over x ~ N(0, s^2) is 1/sqrt(1 + 2 a s^2).
  const double t_factor = 1.0 / std::sqrt(1.0 + st * st / (4.0 * sigma_s * sigma_s));
  const double f_factor =
      1.0 / std::sqrt(1.0 + 4.0 * M_PI * M_PI * sigma_s * sigma_s * sv * sv);
  return s.mode_match * t_factor * f_factor;
}

namespace {

struct EncodedStates {
  Jones a[2][2];      // arm A [basis][bit] Jones vectors
  Jones b[2][2];      // arm B (opposite preparation-error sign)
  double leak = 0.0;  // incoherent orthogonal fraction per pulse
};

EncodedStates encode_states(const Scenario& s) {
  EncodedStates e;
  for (int basis = 0; basis < 2; ++basis) {
    for (int bit = 0; bit < 2; ++bit) {
      const auto pa = photonics::encode_pulse(bit, static_cast<Basis>(basis), 0,
                                              s.intensities, s.extinction_db,
                                              s.z_prep_error_rad);
      const auto pb = photonics::encode_pulse(bit, static_cast<Basis>(basis), 0,
                                              s.intensities, s.extinction_db,
                                              -s.z_prep_error_rad);
      e.a[basis][bit] = pa.polarization;
      e.b[basis][bit] = pb.polarization;
      e.leak = pa.leak_fraction;
    }
  }
  return e;
}

double basis_prob(const Scenario& s, int intensity, Basis b) {
  const double pz = s.intensities.z_basis_probabilities[static_cast<std::size_t>(intensity)];
  return b == Basis::Z ? pz : 1.0 - pz;
}

}  // namespace

SiftedTally expected_tally(const Scenario& s, const Unitary2& arm_a, const Unitary2& arm_b,
                           double xi, double n_pairs) {
  const EncodedStates enc = encode_states(s);
  const DetectorBank bank = DetectorBank::uniform(s.detector);
  const double ta = s.channel_a.transmittance();
  const double tb = s.channel_b.transmittance();

  SiftedTally tally;
  tally.accumulation_s = s.accumulation_s;
  tally.clock_hz = s.clock_hz();

  for (int ia = 0; ia < 4; ++ia) {
    for (int ib = 0; ib < 4; ++ib) {
      const double p_int = s.intensities.send_probabilities[static_cast<std::size_t>(ia)] *
                           s.intensities.send_probabilities[static_cast<std::size_t>(ib)];
      if (p_int <= 0.0) continue;
      const double mu_a = s.intensities.intensities[static_cast<std::size_t>(ia)] * ta;
      const double mu_b = s.intensities.intensities[static_cast<std::size_t>(ib)] * tb;

      for (Basis basis : {Basis::Z, Basis::X}) {
        const double p_basis = basis_prob(s, ia, basis) * basis_prob(s, ib, basis);
        if (p_basis <= 0.0) continue;
        const double cell_n = n_pairs * p_int * p_basis;
        tally.record_sent(ia, ib, basis, cell_n);

        const int bi = basis == Basis::Z ? 0 : 1;
        for (int bit_a = 0; bit_a < 2; ++bit_a) {
          for (int bit_b = 0; bit_b < 2; ++bit_b) {
            const interference::BeamInput in_a{mu_a, arm_a.apply(enc.a[bi][bit_a]),
                                               enc.leak};
            const interference::BeamInput in_b{mu_b, arm_b.apply(enc.b[bi][bit_b]),
                                               enc.leak};
            const BellProbs bp = bell_probs(in_a, in_b, xi, bank, 64);
            const double w = cell_n * 0.25;
            for (BsmOutcome outcome : {BsmOutcome::PsiPlus, BsmOutcome::PsiMinus}) {
              const double p =
                  outcome == BsmOutcome::PsiPlus ? bp.psi_plus : bp.psi_minus;
              const auto sr = protocol::sift(outcome, basis, basis, bit_a, bit_b,
                                             s.keep_psi_plus_in_z);
              if (sr.kept) tally.record_kept(ia, ib, basis, sr.error, w * p);
            }
          }
        }
      }
    }
  }
  return tally;
}

// ---------------------------------------------------------------------------
// Monte Carlo core
// ---------------------------------------------------------------------------

namespace {

struct McContext {
  const Scenario* s = nullptr;
  EncodedStates enc;
  DetectorBank bank;
  double ta = 1.0, tb = 1.0;
  double pair_std_khz = 0.0;
  // cumulative intensity-probability table
  std::array<double, 4> cum{};
};

McContext make_mc_context(const Scenario& s) {
  McContext c;
  c.s = &s;
  c.enc = encode_states(s);
  c.bank = DetectorBank::uniform(s.detector);
  c.ta = s.channel_a.transmittance();
  c.tb = s.channel_b.transmittance();
  c.pair_std_khz =
      std::sqrt(s.jitter_a.single_laser_std_khz * s.jitter_a.single_laser_std_khz +
                s.jitter_b.single_laser_std_khz * s.jitter_b.single_laser_std_khz);
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    acc += s.intensities.send_probabilities[static_cast<std::size_t>(i)];
    c.cum[static_cast<std::size_t>(i)] = acc;
  }
  return c;
}

int draw_intensity(const McContext& c, RandomStream& rng) {
  const double u = rng.u01();
  for (int i = 0; i < 3; ++i) {
    if (u < c.cum[static_cast<std::size_t>(i)]) return i;
  }
  return 3;
}

/// Run `trials` pulse-pair trials with fixed arm transforms; tallies raw counts.
void mc_trials(const McContext& c, const Unitary2& arm_a, const Unitary2& arm_b,
               double trials, SiftedTally& tally, RandomStream& rng) {
  const Scenario& s = *c.s;
  const double sigma_s = s.shape.sigma_ps() * 1e-12;
  const long long n = static_cast<long long>(trials);

  // Pre-rotated encoded states per arm.
  Jones rot_a[2][2], rot_b[2][2];
  for (int basis = 0; basis < 2; ++basis) {
    for (int bit = 0; bit < 2; ++bit) {
      rot_a[basis][bit] = arm_a.apply(c.enc.a[basis][bit]);
      rot_b[basis][bit] = arm_b.apply(c.enc.b[basis][bit]);
    }
  }

  for (long long k = 0; k < n; ++k) {
    const int ia = draw_intensity(c, rng);
    const int ib = draw_intensity(c, rng);
    const Basis basis_a =
        rng.bernoulli(s.intensities.z_basis_probabilities[static_cast<std::size_t>(ia)])
            ? Basis::Z
            : Basis::X;
    const Basis basis_b =
        rng.bernoulli(s.intensities.z_basis_probabilities[static_cast<std::size_t>(ib)])
            ? Basis::Z
            : Basis::X;
    const int bit_a = static_cast<int>(rng.next_u64() & 1ULL);
    const int bit_b = static_cast<int>(rng.next_u64() & 1ULL);

    const bool matched = basis_a == basis_b;
    if (matched) tally.record_sent(ia, ib, basis_a, 1.0);

    const double mu_a = s.intensities.intensities[static_cast<std::size_t>(ia)] * c.ta;
    const double mu_b = s.intensities.intensities[static_cast<std::size_t>(ib)] * c.tb;

    // Wavepacket overlap for this trial's timing and carrier jitter draws.
    const double tau_s = rng.normal(0.0, s.timing_residual_ps) * 1e-12;
    const double dnu_hz = rng.normal(0.0, c.pair_std_khz) * 1e3;
    const double xi =
        s.mode_match * std::exp(-(tau_s * tau_s / (8.0 * sigma_s * sigma_s) +
                                  2.0 * M_PI * M_PI * dnu_hz * dnu_hz * sigma_s * sigma_s));

    const double phi = kTwoPi * rng.u01();
    const interference::BeamInput in_a{mu_a, rot_a[static_cast<int>(basis_a)][bit_a],
                                       c.enc.leak};
    const interference::BeamInput in_b{mu_b, rot_b[static_cast<int>(basis_b)][bit_b],
                                       c.enc.leak};
    const interference::Exposures e = interference::bs_exposures(in_a, in_b, xi, phi);

    interference::ClickPattern pat;
    pat.d1h = rng.bernoulli(photonics::click_probability(e.e1h, c.bank.d1h));
    pat.d1v = rng.bernoulli(photonics::click_probability(e.e1v, c.bank.d1v));
    pat.d2h = rng.bernoulli(photonics::click_probability(e.e2h, c.bank.d2h));
    pat.d2v = rng.bernoulli(photonics::click_probability(e.e2v, c.bank.d2v));
    if (pat.count() != 2) continue;

    const BsmOutcome outcome = interference::classify(pat);
    const auto sr =
        protocol::sift(outcome, basis_a, basis_b, bit_a, bit_b, s.keep_psi_plus_in_z);
    if (sr.kept) tally.record_kept(ia, ib, basis_a, sr.error, 1.0);
  }
}

/// Shared state of one simulated link while control loops run.
struct LinkState {
  photonics::DriftState drift_a, drift_b;
  control::EpcState epc_a, epc_b;
  double timing_corr_a = 0.0, timing_est_a = 0.0, timing_since_a = 1e9;
  double timing_corr_b = 0.0, timing_est_b = 0.0, timing_since_b = 1e9;
};

void timing_update(double& corr, double& est, double& since, double residual, double dt,
                   const control::TimingLoopConfig& cfg) {
  est = (1.0 - cfg.smoothing) * est + cfg.smoothing * residual;
  since += dt;
  if (since >= cfg.measurement_period_s) {
    const double q = cfg.actuator_resolution_ps;
    const double step = q > 0.0 ? q * std::round(est / q) : est;
    corr += step;
    est -= step;
    since = 0.0;
  }
}

}  // namespace

RunResult run_scenario(const Scenario& s) { return run_long(s, 1).front(); }

std::vector<RunResult> run_long(const Scenario& s, int blocks) {
  s.validate();
  if (blocks < 1) throw ContractError("run_long: blocks must be >= 1");

  std::vector<RunResult> results;
  results.reserve(static_cast<std::size_t>(blocks));

  RandomStream root(s.seed);
  const double leak = photonics::polarization_error_floor(s.extinction_db);

  LinkState link;
  RandomStream ctrl_rng = root.substream(9001);  // control noise, persistent across blocks
  const Unitary2 static_arm = photonics::linear_rotation(s.static_misalignment_rad);

  for (int block = 0; block < blocks; ++block) {
    RunResult r;
    r.block_index = block;
    r.xi_bar = effective_overlap(s);
    r.tally.accumulation_s = s.accumulation_s;
    r.tally.clock_hz = s.clock_hz();

    const double n_pairs = s.pairs_per_block();

    if (s.misalignment == MisalignmentMode::Static) {
      if (s.mode == RunMode::Analytic) {
        r.tally = expected_tally(s, static_arm, static_arm, r.xi_bar, n_pairs);
        r.mc_scale = 1.0;
      } else {
        const auto t0 = std::chrono::steady_clock::now();
        const McContext ctx = make_mc_context(s);
        const int shards = s.shards;
        std::vector<SiftedTally> shard_tallies(static_cast<std::size_t>(shards));
        const double per_shard = s.pulse_budget / shards;
        RandomStream block_stream = root.substream(static_cast<std::uint64_t>(block) + 1);

        auto run_shard = [&](int idx) {
          RandomStream rng = block_stream.substream(static_cast<std::uint64_t>(idx));
          shard_tallies[static_cast<std::size_t>(idx)].accumulation_s = s.accumulation_s;
          shard_tallies[static_cast<std::size_t>(idx)].clock_hz = s.clock_hz();
          mc_trials(ctx, static_arm, static_arm, per_shard,
                    shard_tallies[static_cast<std::size_t>(idx)], rng);
        };

        const int workers = std::min(s.threads, shards);
        if (workers <= 1) {
          for (int i = 0; i < shards; ++i) run_shard(i);
        } else {
          std::vector<std::thread> pool;
          std::atomic<int> next{0};
          for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
              for (;;) {
                const int i = next.fetch_add(1);
                if (i >= shards) return;
                run_shard(i);
              }
            });
          }
          for (auto& th : pool) th.join();
        }
        for (auto& st : shard_tallies) r.tally.merge(st);
        const auto t1 = std::chrono::steady_clock::now();
        r.perf.trials = s.pulse_budget;
        r.perf.seconds = std::chrono::duration<double>(t1 - t0).count();
        r.perf.trials_per_s = r.perf.trials / std::fmax(r.perf.seconds, 1e-12);
        r.mc_scale = n_pairs / s.pulse_budget;
        r.diagnostics.push_back(
            "monte carlo counts scaled by " + std::to_string(r.mc_scale) +
            "; scaled-count fluctuations understate full-block statistics");
      }
    } else {
      // Dynamic mode: drift + control loops advance in simulated time; the
      // tally accumulates per control step at the current link state.
      const double dt = s.control.spgd.iteration_period_s;
      const std::size_t steps =
          static_cast<std::size_t>(std::ceil(s.accumulation_s / dt));
      const double probe_budget = 0.5 * dt * s.control.probe_rate_cps;

      const McContext ctx = make_mc_context(s);
      RandomStream mc_rng = root.substream(static_cast<std::uint64_t>(block) + 7001);
      const double trials_per_step = s.pulse_budget / static_cast<double>(steps);

      double sample_due = 0.0;
      std::vector<double> qbers;
      const auto t0 = std::chrono::steady_clock::now();

      for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(block) * s.accumulation_s +
                         static_cast<double>(i) * dt;

        const Unitary2 ua = link.epc_a.unitary().compose(link.drift_a.unitary);
        const Unitary2 ub = link.epc_b.unitary().compose(link.drift_b.unitary);

        const double res_a = link.drift_a.timing_offset_ps - link.timing_corr_a;
        const double res_b = link.drift_b.timing_offset_ps - link.timing_corr_b;
        const double tau_rel = res_a - res_b;
        const double xi_step =
            s.mode_match *
            interference::mode_overlap(s.shape, tau_rel, 0.0).xi *
            (effective_overlap(s) / s.mode_match);  // fold in fast jitters

        if (s.mode == RunMode::Analytic) {
          SiftedTally step_tally =
              expected_tally(s, ua, ub, xi_step, n_pairs / static_cast<double>(steps));
          r.tally.merge(step_tally);
        } else {
          mc_trials(ctx, ua, ub, trials_per_step, r.tally, mc_rng);
        }

        if (t - static_cast<double>(block) * s.accumulation_s >= sample_due) {
          const double q = control::z_basis_qber(
              ua, ub, s.intensities.intensities[0] * ctx.ta,
              s.intensities.intensities[0] * ctx.tb, leak, s.z_prep_error_rad,
              -s.z_prep_error_rad, ctx.bank);
          r.control_trace.samples.push_back({t, q, tau_rel});
          qbers.push_back(q);
          sample_due += 10.0;
        }

        if (s.control.spgd_enabled) {
          auto objective = [&](const photonics::DriftState& d) {
            return [&, d](const control::EpcState& e) {
              const double frac =
                  control::rejected_fraction(e.unitary(), d.unitary, leak);
              return static_cast<double>(ctrl_rng.poisson(probe_budget * frac)) /
                     probe_budget;
            };
          };
          link.epc_a =
              control::spgd_step(link.epc_a, objective(link.drift_a), s.control.spgd, ctrl_rng);
          link.epc_b =
              control::spgd_step(link.epc_b, objective(link.drift_b), s.control.spgd, ctrl_rng);
        }
        link.drift_a = photonics::drift_step(link.drift_a, dt, s.channel_a, ctrl_rng);
        link.drift_b = photonics::drift_step(link.drift_b, dt, s.channel_b, ctrl_rng);
        if (s.control.timing_enabled) {
          timing_update(link.timing_corr_a, link.timing_est_a, link.timing_since_a,
                        link.drift_a.timing_offset_ps - link.timing_corr_a, dt,
                        s.control.timing);
          timing_update(link.timing_corr_b, link.timing_est_b, link.timing_since_b,
                        link.drift_b.timing_offset_ps - link.timing_corr_b, dt,
                        s.control.timing);
        }
      }

      if (!qbers.empty()) {
        const std::size_t half = qbers.size() / 2;
        double acc = 0.0;
        for (std::size_t i = half; i < qbers.size(); ++i) acc += qbers[i];
        r.control_trace.steady_state_qber = acc / static_cast<double>(qbers.size() - half);
      }
      if (s.mode == RunMode::MonteCarlo) {
        const auto t1 = std::chrono::steady_clock::now();
        r.perf.trials = s.pulse_budget;
        r.perf.seconds = std::chrono::duration<double>(t1 - t0).count();
        r.perf.trials_per_s = r.perf.trials / std::fmax(r.perf.seconds, 1e-12);
        r.mc_scale = n_pairs / s.pulse_budget;
      }
    }

    // Analysis on the full-block scale.
    SiftedTally analysis = r.tally;
    if (s.mode == RunMode::MonteCarlo) analysis.scale(r.mc_scale);

    try {
      r.estimate = protocol::run_estimator(analysis, s.intensities, s.finite_key);
      r.report = protocol::key_length(r.estimate, analysis, s.finite_key);
    } catch (const ContractError& e) {
      r.report.feasible = false;
      r.report.diagnostic = e.what();
      r.report.accumulation_s = s.accumulation_s;
      r.diagnostics.push_back(std::string("analysis skipped: ") + e.what());
    }
    r.report.channel = s.channel_label;
    if (!r.report.feasible || r.report.key_length_bits == 0.0) {
      r.diagnostics.push_back("zero secure key for this block");
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<protocol::RatePoint> rate_vs_distance(const Scenario& s,
                                                  const std::vector<double>& distances_km) {
  Scenario base = s;
  base.mode = RunMode::Analytic;
  base.misalignment = MisalignmentMode::Static;
  const Unitary2 arm = photonics::linear_rotation(base.static_misalignment_rad);
  auto tally_at = [&](double d) {
    Scenario sc = base;
    sc.channel_a.length_km = d / 2.0;
    sc.channel_b.length_km = d / 2.0;
    return expected_tally(sc, arm, arm, effective_overlap(sc), sc.pairs_per_block());
  };
  return protocol::asymptotic_rate(tally_at, base.intensities, base.finite_key, distances_km);
}

}  // namespace combmesh::engine
