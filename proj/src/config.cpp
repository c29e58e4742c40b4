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

#include "combmesh/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace combmesh::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// section -> allowed keys. "" is the top level.
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"schema", "seed"}},
      {"comb",
       {"profile", "center_thz", "rep_rate_ghz", "tooth_min", "tooth_max", "snr_floor_db",
        "thermal_hz_per_mk", "gain_p", "gain_i", "temp_walk_mk_per_sqrt_s",
        "meas_noise_hz", "step_s", "rf_ghz", "initial_detuning_hz",
        "laser_jitter_khz", "laser_corr_time_s"}},
      {"source",
       {"profile", "fwhm_ps", "clock_ghz", "extinction_db", "mode_match",
        "timing_jitter_ps", "z_prep_error_rad"}},
      {"channel",
       {"profile", "length_km", "atten_db_per_km", "pol_drift_rad2_per_s",
        "time_drift_ps_per_sqrt_s", "static_misalignment_rad"}},
      {"detectors", {"profile", "efficiency", "dark_prob", "jitter_ps"}},
      {"decoy",
       {"profile", "mu", "nu", "omega", "p_mu", "p_nu", "p_omega", "p_vacuum",
        "keep_psi_plus_in_z"}},
      {"finite_key", {"profile", "epsilon_total", "f_ec", "estimator"}},
      {"control",
       {"profile", "spgd_enabled", "spgd_gain", "spgd_dither_rad", "spgd_period_s",
        "probe_rate_cps", "timing_enabled", "timing_period_s", "timing_smoothing",
        "timing_resolution_ps"}},
      {"network", {"profile", "users", "channels", "tdm_slots"}},
      {"run",
       {"profile", "mode", "accumulation_s", "blocks", "pulse_budget", "shards",
        "threads", "misalignment", "channel_label", "min_mc_throughput"}},
  };
  return s;
}

void check_key(const std::string& section, const std::string& key, const std::string& origin) {
  const auto& sc = schema();
  auto it = sc.find(section);
  if (it == sc.end()) {
    throw ConfigError(origin + ": unknown section [" + section + "]");
  }
  if (!it->second.count(key)) {
    throw ConfigError(origin + ": unknown key '" + key + "' in section [" + section + "]");
  }
}

ConfigFile::Value parse_value(const std::string& raw, const std::string& origin) {
  ConfigFile::Value v;
  if (raw.empty()) throw ConfigError(origin + ": empty value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') {
      throw ConfigError(origin + ": unterminated string value");
    }
    v.kind = ConfigFile::Value::Kind::String;
    v.text = raw.substr(1, raw.size() - 2);
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = ConfigFile::Value::Kind::Boolean;
    v.boolean = raw == "true";
    return v;
  }
  char* end = nullptr;
  const double num = std::strtod(raw.c_str(), &end);
  if (end != raw.c_str() + raw.size()) {
    // bare token string (profile names etc.)
    v.kind = ConfigFile::Value::Kind::String;
    v.text = raw;
    return v;
  }
  v.kind = ConfigFile::Value::Kind::Number;
  v.number = num;
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    // Strip comments outside quotes.
    bool quoted = false;
    std::string clean;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      if (c == '#' && !quoted) break;
      clean.push_back(c);
    }
    clean = trim(clean);
    if (clean.empty()) continue;

    if (clean.front() == '[') {
      if (clean.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(clean.substr(1, clean.size() - 2));
      if (!schema().count(section)) {
        throw ConfigError(where + ": unknown section [" + section + "]");
      }
      cfg.sections_[section];  // record presence even if empty
      continue;
    }

    const auto eq = clean.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(clean.substr(0, eq));
    const std::string raw = trim(clean.substr(eq + 1));
    check_key(section, key, where);
    cfg.sections_[section][key] = parse_value(raw, where);
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

void ConfigFile::apply_override(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + spec + "' must look like section.key=value");
  }
  const std::string path = trim(spec.substr(0, eq));
  const std::string raw = trim(spec.substr(eq + 1));
  const auto dot = path.find('.');
  const std::string section = dot == std::string::npos ? "" : path.substr(0, dot);
  const std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
  check_key(section, key, "override '" + spec + "'");
  sections_[section][key] = parse_value(raw, "override '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Profiles and typed access
// ---------------------------------------------------------------------------

namespace {

class SectionReader {
 public:
  SectionReader(const ConfigFile& cfg, std::string name)
      : name_(std::move(name)), section_(cfg.section(name_)) {}

  double number(const std::string& key, double fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigFile::Value::Kind::Number) {
      throw ConfigError("[" + name_ + "] " + key + ": expected a number");
    }
    return v->number;
  }

  long long integer(const std::string& key, long long fallback) const {
    const double d = number(key, static_cast<double>(fallback));
    const long long n = std::llround(d);
    if (std::fabs(d - static_cast<double>(n)) > 1e-9) {
      throw ConfigError("[" + name_ + "] " + key + ": expected an integer");
    }
    return n;
  }

  bool boolean(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigFile::Value::Kind::Boolean) {
      throw ConfigError("[" + name_ + "] " + key + ": expected true/false");
    }
    return v->boolean;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigFile::Value::Kind::String) {
      throw ConfigError("[" + name_ + "] " + key + ": expected a string");
    }
    return v->text;
  }

  std::string profile() const { return text("profile", "paper-2025"); }

 private:
  const ConfigFile::Value* find(const std::string& key) const {
    if (!section_) return nullptr;
    auto it = section_->find(key);
    return it == section_->end() ? nullptr : &it->second;
  }

  std::string name_;
  const ConfigFile::Section* section_;
};

void require_profile(const std::string& section, const std::string& profile,
                     std::initializer_list<const char*> known) {
  for (const char* k : known) {
    if (profile == k) return;
  }
  throw ConfigError("[" + section + "] unknown profile '" + profile + "'");
}

}  // namespace

ScenarioBundle default_bundle(const std::string& profile) {
  if (profile != "paper-2025" && profile != "paper-2025-ull") {
    throw ConfigError("unknown calibration profile '" + profile + "'");
  }
  ScenarioBundle b;
  b.seed = 1;

  engine::Scenario& s = b.scenario;
  s.plan = comb::CombPlan{};
  s.jitter_a = comb::SeedJitterModel{21.7, 1.0};
  s.jitter_b = comb::SeedJitterModel{21.7, 1.0};
  s.shape = photonics::PulseShape{95.0, 2.5};
  s.extinction_db = 30.0;
  s.mode_match = 0.985;
  s.z_prep_error_rad = 0.07;

  // Calibrated decoy source: fitted against the 1000-s finite-size rate of
  // the 200-km analytic scenario (coordinate descent, see decoy-tune),
  // constrained to the observed QBER bands.
  s.intensities.intensities = {0.28, 0.16, 0.064, 0.0};
  s.intensities.send_probabilities = {0.41, 0.10, 0.34, 0.15};
  s.intensities.z_basis_probabilities = {1.0, 0.0, 0.0, 0.0};

  s.channel_a = photonics::FiberChannel{100.0, profile == "paper-2025-ull" ? 0.16 : 0.2,
                                        2e-4, 2.0};
  s.channel_b = s.channel_a;
  s.detector = photonics::DetectorModel{0.90, 1e-7, 30.0, "D"};

  s.control.spgd_enabled = true;
  s.control.spgd = control::SpgdConfig{6.0, 0.04, 0.25, "rejected-count"};
  s.control.probe_rate_cps = 3.0e4;
  s.control.timing_enabled = true;
  s.control.timing = control::TimingLoopConfig{1.0, 0.6, 0.2, true};

  s.misalignment = engine::MisalignmentMode::Static;
  s.static_misalignment_rad = 0.022;
  s.timing_residual_ps = 2.0;

  s.finite_key = protocol::FiniteKeyParams{};
  s.accumulation_s = 1000.0;
  s.mode = engine::RunMode::Analytic;
  s.pulse_budget = 1.0e7;
  s.shards = 1;
  s.threads = 1;
  s.keep_psi_plus_in_z = true;
  s.seed = 1;
  s.channel_label = "H28";

  b.network = netplan::NetworkSpec{200, 200, 100};

  b.lock = comb::LockLoopConfig{};
  b.lock.thermal_hz_per_mk = 2000.0;
  b.lock.gain_p = 0.0;
  b.lock.gain_i = 0.05;
  b.lock.noise = comb::LockNoiseModel{0.03, 25.0};
  b.lock.step_interval_s = 1.0;
  b.lock.rf_reference_ghz = 49.0;
  b.lock.initial_detuning_hz = 0.0;
  return b;
}

ScenarioBundle scenario_from_config(const ConfigFile& cfg) {
  if (!cfg.has_section("decoy")) {
    throw ConfigError("missing required section [decoy]");
  }

  const SectionReader top(cfg, "");
  const SectionReader comb_r(cfg, "comb");
  const SectionReader source(cfg, "source");
  const SectionReader channel(cfg, "channel");
  const SectionReader detectors(cfg, "detectors");
  const SectionReader decoy(cfg, "decoy");
  const SectionReader finite(cfg, "finite_key");
  const SectionReader control_r(cfg, "control");
  const SectionReader network(cfg, "network");
  const SectionReader run(cfg, "run");

  require_profile("channel", channel.profile(), {"paper-2025", "paper-2025-ull"});
  for (const auto& [name, reader] :
       std::initializer_list<std::pair<const char*, const SectionReader*>>{
           {"comb", &comb_r}, {"source", &source}, {"detectors", &detectors},
           {"decoy", &decoy}, {"finite_key", &finite}, {"control", &control_r},
           {"network", &network}, {"run", &run}}) {
    require_profile(name, reader->profile(), {"paper-2025"});
  }

  const long long schema_version = top.integer("schema", 1);
  if (schema_version != 1) {
    throw ConfigError("unsupported config schema version " + std::to_string(schema_version));
  }

  ScenarioBundle b = default_bundle(channel.profile());
  b.seed = static_cast<std::uint64_t>(top.integer("seed", 1));
  engine::Scenario& s = b.scenario;
  s.seed = b.seed;

  s.plan.center_frequency_thz = comb_r.number("center_thz", s.plan.center_frequency_thz);
  s.plan.repetition_rate_ghz = comb_r.number("rep_rate_ghz", s.plan.repetition_rate_ghz);
  s.plan.tooth_min = static_cast<int>(comb_r.integer("tooth_min", s.plan.tooth_min));
  s.plan.tooth_max = static_cast<int>(comb_r.integer("tooth_max", s.plan.tooth_max));
  s.plan.snr_floor_db = comb_r.number("snr_floor_db", s.plan.snr_floor_db);
  const double jitter = comb_r.number("laser_jitter_khz", s.jitter_a.single_laser_std_khz);
  const double corr = comb_r.number("laser_corr_time_s", s.jitter_a.correlation_time_s);
  s.jitter_a = {jitter, corr};
  s.jitter_b = {jitter, corr};

  b.lock.thermal_hz_per_mk = comb_r.number("thermal_hz_per_mk", b.lock.thermal_hz_per_mk);
  b.lock.gain_p = comb_r.number("gain_p", b.lock.gain_p);
  b.lock.gain_i = comb_r.number("gain_i", b.lock.gain_i);
  b.lock.noise.temperature_walk_mk_per_sqrt_s =
      comb_r.number("temp_walk_mk_per_sqrt_s", b.lock.noise.temperature_walk_mk_per_sqrt_s);
  b.lock.noise.measurement_noise_hz =
      comb_r.number("meas_noise_hz", b.lock.noise.measurement_noise_hz);
  b.lock.step_interval_s = comb_r.number("step_s", b.lock.step_interval_s);
  b.lock.rf_reference_ghz = comb_r.number("rf_ghz", b.lock.rf_reference_ghz);
  b.lock.initial_detuning_hz = comb_r.number("initial_detuning_hz", b.lock.initial_detuning_hz);

  s.shape.fwhm_ps = source.number("fwhm_ps", s.shape.fwhm_ps);
  s.shape.clock_ghz = source.number("clock_ghz", s.shape.clock_ghz);
  s.extinction_db = source.number("extinction_db", s.extinction_db);
  s.z_prep_error_rad = source.number("z_prep_error_rad", s.z_prep_error_rad);
  s.mode_match = source.number("mode_match", s.mode_match);
  s.timing_residual_ps = source.number("timing_jitter_ps", s.timing_residual_ps);

  const double total_km = channel.number("length_km", 200.0);
  if (total_km < 0.0) throw ConfigError("[channel] length_km: must be nonnegative");
  s.channel_a.length_km = total_km / 2.0;
  s.channel_b.length_km = total_km / 2.0;
  s.channel_a.attenuation_db_per_km =
      channel.number("atten_db_per_km", s.channel_a.attenuation_db_per_km);
  s.channel_b.attenuation_db_per_km = s.channel_a.attenuation_db_per_km;
  s.channel_a.polarization_drift_rad2_per_s =
      channel.number("pol_drift_rad2_per_s", s.channel_a.polarization_drift_rad2_per_s);
  s.channel_b.polarization_drift_rad2_per_s = s.channel_a.polarization_drift_rad2_per_s;
  s.channel_a.timing_drift_ps_per_sqrt_s =
      channel.number("time_drift_ps_per_sqrt_s", s.channel_a.timing_drift_ps_per_sqrt_s);
  s.channel_b.timing_drift_ps_per_sqrt_s = s.channel_a.timing_drift_ps_per_sqrt_s;
  s.static_misalignment_rad =
      channel.number("static_misalignment_rad", s.static_misalignment_rad);

  s.detector.efficiency = detectors.number("efficiency", s.detector.efficiency);
  s.detector.dark_prob = detectors.number("dark_prob", s.detector.dark_prob);
  s.detector.jitter_ps = detectors.number("jitter_ps", s.detector.jitter_ps);

  s.intensities.intensities[0] = decoy.number("mu", s.intensities.intensities[0]);
  s.intensities.intensities[1] = decoy.number("nu", s.intensities.intensities[1]);
  s.intensities.intensities[2] = decoy.number("omega", s.intensities.intensities[2]);
  s.intensities.send_probabilities[0] = decoy.number("p_mu", s.intensities.send_probabilities[0]);
  s.intensities.send_probabilities[1] = decoy.number("p_nu", s.intensities.send_probabilities[1]);
  s.intensities.send_probabilities[2] =
      decoy.number("p_omega", s.intensities.send_probabilities[2]);
  s.intensities.send_probabilities[3] =
      decoy.number("p_vacuum", 1.0 - s.intensities.send_probabilities[0] -
                                    s.intensities.send_probabilities[1] -
                                    s.intensities.send_probabilities[2]);
  s.keep_psi_plus_in_z = decoy.boolean("keep_psi_plus_in_z", s.keep_psi_plus_in_z);

  s.finite_key.epsilon_total = finite.number("epsilon_total", s.finite_key.epsilon_total);
  s.finite_key.f_ec = finite.number("f_ec", s.finite_key.f_ec);
  const std::string est = finite.text("estimator", "joint-lp");
  if (est == "joint-lp") {
    s.finite_key.estimator = protocol::EstimatorKind::JointLp;
  } else if (est == "analytic-two-decoy") {
    s.finite_key.estimator = protocol::EstimatorKind::AnalyticTwoDecoy;
  } else {
    throw ConfigError("[finite_key] estimator: expected 'joint-lp' or 'analytic-two-decoy'");
  }

  s.control.spgd_enabled = control_r.boolean("spgd_enabled", s.control.spgd_enabled);
  s.control.spgd.gain = control_r.number("spgd_gain", s.control.spgd.gain);
  s.control.spgd.perturbation = control_r.number("spgd_dither_rad", s.control.spgd.perturbation);
  s.control.spgd.iteration_period_s = control_r.number("spgd_period_s", s.control.spgd.iteration_period_s);
  s.control.probe_rate_cps = control_r.number("probe_rate_cps", s.control.probe_rate_cps);
  s.control.timing_enabled = control_r.boolean("timing_enabled", s.control.timing_enabled);
  s.control.timing.measurement_period_s =
      control_r.number("timing_period_s", s.control.timing.measurement_period_s);
  s.control.timing.smoothing = control_r.number("timing_smoothing", s.control.timing.smoothing);
  s.control.timing.actuator_resolution_ps =
      control_r.number("timing_resolution_ps", s.control.timing.actuator_resolution_ps);

  b.network.users = static_cast<int>(network.integer("users", b.network.users));
  b.network.channels = static_cast<int>(network.integer("channels", b.network.channels));
  b.network.tdm_slots = static_cast<int>(network.integer("tdm_slots", b.network.tdm_slots));

  const std::string mode = run.text("mode", "analytic");
  if (mode == "analytic") {
    s.mode = engine::RunMode::Analytic;
  } else if (mode == "monte_carlo") {
    s.mode = engine::RunMode::MonteCarlo;
  } else {
    throw ConfigError("[run] mode: expected 'analytic' or 'monte_carlo'");
  }
  const std::string mis = run.text("misalignment", "static");
  if (mis == "static") {
    s.misalignment = engine::MisalignmentMode::Static;
  } else if (mis == "dynamic") {
    s.misalignment = engine::MisalignmentMode::Dynamic;
  } else {
    throw ConfigError("[run] misalignment: expected 'static' or 'dynamic'");
  }
  s.accumulation_s = run.number("accumulation_s", s.accumulation_s);
  b.blocks = static_cast<int>(run.integer("blocks", b.blocks));
  if (b.blocks < 1) throw ConfigError("[run] blocks: must be >= 1");
  s.pulse_budget = run.number("pulse_budget", s.pulse_budget);
  s.shards = static_cast<int>(run.integer("shards", s.shards));
  s.threads = static_cast<int>(run.integer("threads", s.threads));
  s.channel_label = run.text("channel_label", s.channel_label);
  s.min_mc_throughput = run.number("min_mc_throughput", s.min_mc_throughput);

  try {
    s.validate();
    s.intensities.validate();
    b.network.validate();
    b.lock.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return b;
}

}  // namespace combmesh::config
