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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "combmesh/config.hpp"
#include "combmesh/engine.hpp"
#include "combmesh/io.hpp"

namespace fs = std::filesystem;
using namespace combmesh;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  long long seed = -1;
  int threads = 0;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required) {
  auto* copt = cmd->add_option("--config", o.config_path, "scenario config file");
  if (config_required) copt->required();
  cmd->add_option("--out", o.out_dir, "output directory (default $COMBMESH_OUT or ./out)");
  cmd->add_option("--override", o.overrides, "section.key=value config override")
      ->take_all();
  cmd->add_option("--seed", o.seed, "override the run seed");
  cmd->add_option("--threads", o.threads, "cap worker threads");
  cmd->add_flag("--dry-run", o.dry_run, "validate inputs and exit without writing");
}

fs::path resolve_out(const CommonOpts& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("COMBMESH_OUT")) return env;
  return "out";
}

config::ScenarioBundle load_bundle(const CommonOpts& o) {
  config::ConfigFile cfg;
  if (!o.config_path.empty()) {
    cfg = config::ConfigFile::parse_file(o.config_path);
  } else {
    cfg = config::ConfigFile::parse_string("[decoy]\nprofile = \"paper-2025\"\n", "<defaults>");
  }
  for (const auto& ov : o.overrides) cfg.apply_override(ov);
  if (o.seed >= 0) cfg.apply_override("seed=" + std::to_string(o.seed));
  config::ScenarioBundle b = config::scenario_from_config(cfg);
  if (o.threads > 0) b.scenario.threads = o.threads;
  return b;
}

fs::path prepare_out(const CommonOpts& o) {
  const fs::path dir = resolve_out(o);
  fs::create_directories(dir);
  return dir;
}

void note(const fs::path& p) { std::cout << "wrote " << p.string() << "\n"; }

int cmd_simulate(const CommonOpts& o) {
  config::ScenarioBundle b = load_bundle(o);
  if (o.dry_run) {
    std::cout << "scenario ok: " << (b.scenario.mode == engine::RunMode::Analytic
                                         ? "analytic"
                                         : "monte_carlo")
              << " mode, "
              << b.scenario.channel_a.length_km + b.scenario.channel_b.length_km
              << " km, " << b.blocks << " block(s), accumulation "
              << b.scenario.accumulation_s << " s\n";
    return 0;
  }
  const fs::path dir = prepare_out(o);
  const auto results = engine::run_long(b.scenario, b.blocks);

  io::write_text((dir / "result.json").string(), io::result_json(b.scenario, results));
  note(dir / "result.json");
  io::write_keyreport_csv((dir / "keyreport.csv").string(), results);
  note(dir / "keyreport.csv");
  io::write_tally_csv((dir / "tally.csv").string(), results);
  note(dir / "tally.csv");
  if (b.scenario.misalignment == engine::MisalignmentMode::Dynamic) {
    control::CompensationTrace all;
    for (const auto& r : results) {
      all.samples.insert(all.samples.end(), r.control_trace.samples.begin(),
                         r.control_trace.samples.end());
    }
    io::write_compensation_csv((dir / "control_trace.csv").string(), all);
    note(dir / "control_trace.csv");
  }
  for (const auto& r : results) {
    std::cout << "block " << r.block_index << ": rate " << r.report.key_rate_bps
              << " bps, qber_z " << r.report.qber_z << ", qber_x " << r.report.qber_x
              << "\n";
    if (r.perf.trials > 0.0) {
      std::cerr << "perf: " << r.perf.trials_per_s << " trials/s\n";
    }
  }
  return 0;
}

int cmd_hom_scan(const CommonOpts& o, double mu, int points, double max_delay_ps,
                 int ensemble) {
  config::ScenarioBundle b = load_bundle(o);
  interference::HomScanConfig hc;
  hc.shape = b.scenario.shape;
  hc.mu = mu;
  hc.detector = b.scenario.detector;
  hc.timing_jitter_ps = b.scenario.timing_residual_ps;
  hc.detuning_std_khz =
      std::sqrt(b.scenario.jitter_a.single_laser_std_khz * b.scenario.jitter_a.single_laser_std_khz +
                b.scenario.jitter_b.single_laser_std_khz * b.scenario.jitter_b.single_laser_std_khz);
  hc.mode_match = b.scenario.mode_match;
  hc.extinction_db = b.scenario.extinction_db;
  hc.ensemble = ensemble;
  hc.seed = b.seed;

  if (max_delay_ps <= 0.0) max_delay_ps = 6.0 * hc.shape.fwhm_ps;
  std::vector<double> delays;
  for (int i = 0; i < points; ++i) {
    delays.push_back(-max_delay_ps + 2.0 * max_delay_ps * i / (points - 1));
  }
  if (o.dry_run) {
    std::cout << "hom-scan ok: " << points << " delays to " << max_delay_ps << " ps\n";
    return 0;
  }
  const fs::path dir = prepare_out(o);
  const auto result = interference::hom_scan(hc, delays);
  io::write_hom_csv((dir / "hom_scan.csv").string(), result);
  note(dir / "hom_scan.csv");
  std::cout << "visibility " << result.visibility << "\n";
  return 0;
}

int cmd_keyrate_vs_distance(const CommonOpts& o, double min_km, double max_km, double step_km) {
  config::ScenarioBundle b = load_bundle(o);
  std::vector<double> grid;
  for (double d = min_km; d <= max_km + 1e-9; d += step_km) grid.push_back(d);
  if (o.dry_run) {
    std::cout << "keyrate-vs-distance ok: " << grid.size() << " points\n";
    return 0;
  }
  const fs::path dir = prepare_out(o);
  const auto std_curve = engine::rate_vs_distance(b.scenario, grid);
  engine::Scenario ull = b.scenario;
  ull.channel_a.attenuation_db_per_km = 0.16;
  ull.channel_b.attenuation_db_per_km = 0.16;
  const auto ull_curve = engine::rate_vs_distance(ull, grid);
  io::write_keyrate_distance_csv((dir / "keyrate_vs_distance.csv").string(), "standard",
                                 std_curve, ull_curve);
  note(dir / "keyrate_vs_distance.csv");
  return 0;
}

int cmd_lock_sim(const CommonOpts& o, double duration_s) {
  config::ScenarioBundle b = load_bundle(o);
  if (o.dry_run) {
    std::cout << "lock-sim ok: " << duration_s << " s\n";
    return 0;
  }
  const fs::path dir = prepare_out(o);
  const auto traj = comb::simulate_lock(b.lock, duration_s, b.seed);
  io::write_lock_csv((dir / "lock_trajectory.csv").string(), traj);
  note(dir / "lock_trajectory.csv");
  std::cout << "delta_omega_r std " << traj.std_hz << " Hz, p2p " << traj.p2p_hz
            << " Hz, temperature excursion " << traj.temperature_excursion_mk << " mK\n";
  return 0;
}

int cmd_compensate(const CommonOpts& o, double duration_s, bool loop_off) {
  config::ScenarioBundle b = load_bundle(o);
  if (o.dry_run) {
    std::cout << "compensate ok: " << duration_s << " s, loop "
              << (loop_off ? "off" : "on") << "\n";
    return 0;
  }
  const fs::path dir = prepare_out(o);
  control::LinkArm arm_a{b.scenario.channel_a, b.scenario.control.probe_rate_cps, {}, {}};
  control::LinkArm arm_b{b.scenario.channel_b, b.scenario.control.probe_rate_cps, {}, {}};
  control::CompensationConfig cc;
  cc.spgd = b.scenario.control.spgd;
  cc.loop_on = !loop_off;
  cc.extinction_db = b.scenario.extinction_db;
  cc.z_prep_error_rad = b.scenario.z_prep_error_rad;
  cc.signal_mu = b.scenario.intensities.intensities[0];
  cc.detector = b.scenario.detector;
  cc.timing = b.scenario.control.timing;
  const auto trace = control::run_compensation(arm_a, arm_b, cc, duration_s, b.seed);
  io::write_compensation_csv((dir / "compensation_trace.csv").string(), trace);
  note(dir / "compensation_trace.csv");
  std::cout << "steady-state qber " << trace.steady_state_qber << "\n";
  return 0;
}

int cmd_netplan(const CommonOpts& o, double raw_rate_bps) {
  config::ScenarioBundle b = load_bundle(o);
  if (o.dry_run) {
    std::cout << "netplan ok: " << b.network.users << " users, " << b.network.channels
              << " channels, " << b.network.tdm_slots << " slots\n";
    return 0;
  }
  const fs::path dir = prepare_out(o);
  const auto alloc = netplan::allocate(b.network);
  const auto rep = netplan::network_report(alloc, raw_rate_bps);
  io::write_text((dir / "allocation.json").string(), io::allocation_json(alloc, rep));
  note(dir / "allocation.json");
  io::write_allocation_csv((dir / "allocation.csv").string(), alloc, rep);
  note(dir / "allocation.csv");
  std::cout << alloc.assignments.size() << " pairs, mean rate " << rep.mean_rate_bps
            << " bps, min " << rep.min_rate_bps << " bps\n";
  return 0;
}

int cmd_decoy_tune(const CommonOpts& o, int sweeps) {
  config::ScenarioBundle b = load_bundle(o);
  engine::Scenario base = b.scenario;
  base.mode = engine::RunMode::Analytic;
  base.misalignment = engine::MisalignmentMode::Static;
  if (o.dry_run) {
    std::cout << "decoy-tune ok: " << sweeps << " sweeps\n";
    return 0;
  }
  auto rate_of = [&](const photonics::IntensitySet& set) {
    engine::Scenario s = base;
    s.intensities = set;
    try {
      return engine::run_scenario(s).report.key_rate_bps;
    } catch (const Error&) {
      return 0.0;
    }
  };
  const auto best = protocol::optimize_intensities(rate_of, base.intensities, sweeps);
  std::cout << "best rate " << best.rate_bps << " bps after " << best.evaluations
            << " evaluations\n"
            << "mu = " << best.set.intensities[0] << ", nu = " << best.set.intensities[1]
            << ", omega = " << best.set.intensities[2] << "\n"
            << "p_mu = " << best.set.send_probabilities[0]
            << ", p_nu = " << best.set.send_probabilities[1]
            << ", p_omega = " << best.set.send_probabilities[2]
            << ", p_vacuum = " << best.set.send_probabilities[3] << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soliton-comb MDI-QKD mesh network simulator"};
  app.require_subcommand(1);

  CommonOpts o_sim, o_hom, o_dist, o_lock, o_comp, o_net, o_tune;

  auto* sim = app.add_subcommand("simulate", "run a scenario and write result tables");
  add_common(sim, o_sim, true);

  auto* hom = app.add_subcommand("hom-scan", "two-photon interference dip scan");
  add_common(hom, o_hom, false);
  double hom_mu = 0.1, hom_max_delay = 0.0;
  int hom_points = 41, hom_ensemble = 200;
  hom->add_option("--mu", hom_mu, "mean photons per pulse at the beam splitter");
  hom->add_option("--points", hom_points, "number of delay points");
  hom->add_option("--max-delay-ps", hom_max_delay, "scan half-width (default 6 FWHM)");
  hom->add_option("--ensemble", hom_ensemble, "imperfection draws per point");

  auto* dist = app.add_subcommand("keyrate-vs-distance", "asymptotic rate/distance table");
  add_common(dist, o_dist, false);
  double d_min = 0.0, d_max = 400.0, d_step = 20.0;
  dist->add_option("--min-km", d_min, "start distance");
  dist->add_option("--max-km", d_max, "end distance");
  dist->add_option("--step-km", d_step, "grid step");

  auto* lock = app.add_subcommand("lock-sim", "repetition-rate lock trajectory");
  add_common(lock, o_lock, false);
  double lock_duration = 10800.0;
  lock->add_option("--duration-s", lock_duration, "simulated duration");

  auto* comp = app.add_subcommand("compensate", "polarization compensation trace");
  add_common(comp, o_comp, false);
  double comp_duration = 3600.0;
  bool comp_loop_off = false;
  comp->add_option("--duration-s", comp_duration, "simulated duration");
  comp->add_flag("--loop-off", comp_loop_off, "freeze the compensator");

  auto* net = app.add_subcommand("netplan", "full-mesh channel/slot allocation");
  add_common(net, o_net, false);
  double raw_rate = 62.0;
  net->add_option("--raw-rate-bps", raw_rate, "raw per-channel key rate");

  auto* tune = app.add_subcommand("decoy-tune", "optimize decoy intensities for the scenario");
  add_common(tune, o_tune, false);
  int tune_sweeps = 8;
  tune->add_option("--sweeps", tune_sweeps, "coordinate-descent sweeps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o_sim);
    if (hom->parsed()) return cmd_hom_scan(o_hom, hom_mu, hom_points, hom_max_delay, hom_ensemble);
    if (dist->parsed()) return cmd_keyrate_vs_distance(o_dist, d_min, d_max, d_step);
    if (lock->parsed()) return cmd_lock_sim(o_lock, lock_duration);
    if (comp->parsed()) return cmd_compensate(o_comp, comp_duration, comp_loop_off);
    if (net->parsed()) return cmd_netplan(o_net, raw_rate);
    if (tune->parsed()) return cmd_decoy_tune(o_tune, tune_sweeps);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FeasibilityError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const InstabilityError& e) {
    std::cerr << "numeric failure: " << e.what() << " (t = " << e.time_s << " s)\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
