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

#include "combmesh/io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace combmesh::io {

using nlohmann::json;
using photonics::Basis;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (const auto& h : header) {
    field(h);
  }
  end_row();
}

CsvWriter& CsvWriter::field(const std::string& s) {
  if (in_row_ > 0) out_.push_back(',');
  const bool needs_quote = s.find_first_of(",\"\r\n") != std::string::npos;
  if (needs_quote) {
    out_.push_back('"');
    for (char c : s) {
      if (c == '"') out_.push_back('"');
      out_.push_back(c);
    }
    out_.push_back('"');
  } else {
    out_ += s;
  }
  ++in_row_;
  return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }
CsvWriter& CsvWriter::field(long long v) { return field(std::to_string(v)); }

void CsvWriter::end_row() {
  if (columns_ && in_row_ != columns_) {
    throw ContractError("CsvWriter: row has " + std::to_string(in_row_) + " fields, expected " +
                        std::to_string(columns_));
  }
  out_ += "\r\n";
  in_row_ = 0;
}

std::string CsvWriter::str() const { return out_; }

void CsvWriter::write(const std::string& path) const { write_text(path, out_); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file '" + path + "'");
  out << text;
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

void write_lock_csv(const std::string& path, const comb::LockTrajectory& t) {
  CsvWriter w({"time_s", "delta_omega_r_hz", "temperature_mk"});
  for (const auto& s : t.samples) {
    w.field(s.time_s).field(s.delta_omega_r_hz).field(s.temperature_offset_mk);
    w.end_row();
  }
  w.write(path);
}

void write_hom_csv(const std::string& path, const interference::HomScanResult& r) {
  CsvWriter w({"delay_ps", "coincidence_rate", "visibility"});
  for (const auto& p : r.curve) {
    w.field(p.delay_ps).field(p.coincidence).field(r.visibility);
    w.end_row();
  }
  w.write(path);
}

void write_compensation_csv(const std::string& path, const control::CompensationTrace& t) {
  CsvWriter w({"time_s", "qber", "residual_ps"});
  for (const auto& s : t.samples) {
    w.field(s.time_s).field(s.qber).field(s.residual_ps);
    w.end_row();
  }
  w.write(path);
}

void write_keyrate_distance_csv(const std::string& path, const std::string& fiber,
                                const std::vector<protocol::RatePoint>& std_curve,
                                const std::vector<protocol::RatePoint>& ull_curve) {
  CsvWriter w({"fiber", "distance_km", "key_rate_bps"});
  for (const auto& p : std_curve) {
    w.field(fiber).field(p.distance_km).field(p.rate_bps);
    w.end_row();
  }
  for (const auto& p : ull_curve) {
    w.field(std::string("ull")).field(p.distance_km).field(p.rate_bps);
    w.end_row();
  }
  w.write(path);
}

void write_keyreport_csv(const std::string& path, const std::vector<engine::RunResult>& blocks) {
  CsvWriter w({"block", "channel", "qber_z", "qber_x", "key_length_bits", "key_rate_bps",
               "accumulation_s"});
  for (const auto& b : blocks) {
    w.field(b.block_index)
        .field(b.report.channel)
        .field(b.report.qber_z)
        .field(b.report.qber_x)
        .field(b.report.key_length_bits)
        .field(b.report.key_rate_bps)
        .field(b.report.accumulation_s);
    w.end_row();
  }
  w.write(path);
}

namespace {

const char* basis_name(Basis b) { return b == Basis::Z ? "Z" : "X"; }

}  // namespace

void write_tally_csv(const std::string& path, const std::vector<engine::RunResult>& blocks) {
  CsvWriter w({"block", "intensity_a", "intensity_b", "basis", "sent", "kept", "errors"});
  for (const auto& b : blocks) {
    for (int ia = 0; ia < 4; ++ia) {
      for (int ib = 0; ib < 4; ++ib) {
        for (Basis basis : {Basis::Z, Basis::X}) {
          const auto& c = b.tally.cell(ia, ib, basis);
          if (c.sent == 0.0 && c.kept == 0.0) continue;
          w.field(b.block_index).field(ia).field(ib).field(std::string(basis_name(basis)));
          w.field(c.sent).field(c.kept).field(c.errors);
          w.end_row();
        }
      }
    }
  }
  w.write(path);
}

void write_allocation_csv(const std::string& path, const netplan::Allocation& a,
                          const netplan::NetworkReport& rep) {
  CsvWriter w({"user_a", "user_b", "channel", "slot", "duty_cycle", "effective_rate_bps"});
  for (std::size_t i = 0; i < a.assignments.size(); ++i) {
    const auto& as = a.assignments[i];
    w.field(as.user_a).field(as.user_b).field(as.channel).field(as.slot).field(as.duty_cycle);
    w.field(i < rep.per_pair_rate_bps.size() ? rep.per_pair_rate_bps[i] : 0.0);
    w.end_row();
  }
  w.write(path);
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

namespace {

json tally_to_json(const protocol::SiftedTally& t) {
  json cells = json::array();
  for (int ia = 0; ia < 4; ++ia) {
    for (int ib = 0; ib < 4; ++ib) {
      for (Basis basis : {Basis::Z, Basis::X}) {
        const auto& c = t.cell(ia, ib, basis);
        if (c.sent == 0.0 && c.kept == 0.0) continue;
        cells.push_back({{"intensity_a", ia},
                         {"intensity_b", ib},
                         {"basis", basis_name(basis)},
                         {"sent", c.sent},
                         {"kept", c.kept},
                         {"errors", c.errors}});
      }
    }
  }
  return {{"accumulation_s", t.accumulation_s}, {"clock_hz", t.clock_hz}, {"cells", cells}};
}

json report_to_json(const protocol::KeyReport& r) {
  return {{"channel", r.channel},
          {"qber_z", r.qber_z},
          {"qber_x", r.qber_x},
          {"key_length_bits", r.key_length_bits},
          {"key_rate_bps", r.key_rate_bps},
          {"accumulation_s", r.accumulation_s},
          {"feasible", r.feasible},
          {"diagnostic", r.diagnostic}};
}

}  // namespace

std::string result_json(const engine::Scenario& s, const std::vector<engine::RunResult>& blocks) {
  json doc;
  doc["schema"] = "combmesh/result/v1";
  doc["scenario"] = {
      {"seed", s.seed},
      {"mode", s.mode == engine::RunMode::Analytic ? "analytic" : "monte_carlo"},
      {"misalignment", s.misalignment == engine::MisalignmentMode::Static ? "static" : "dynamic"},
      {"accumulation_s", s.accumulation_s},
      {"clock_ghz", s.shape.clock_ghz},
      {"fwhm_ps", s.shape.fwhm_ps},
      {"extinction_db", s.extinction_db},
      {"mode_match", s.mode_match},
      {"length_km_total", s.channel_a.length_km + s.channel_b.length_km},
      {"atten_db_per_km", s.channel_a.attenuation_db_per_km},
      {"detector_efficiency", s.detector.efficiency},
      {"dark_prob", s.detector.dark_prob},
      {"intensities", s.intensities.intensities},
      {"send_probabilities", s.intensities.send_probabilities},
      {"epsilon_total", s.finite_key.epsilon_total},
      {"f_ec", s.finite_key.f_ec},
      {"channel_label", s.channel_label},
  };
  json arr = json::array();
  for (const auto& b : blocks) {
    json jb;
    jb["block"] = b.block_index;
    jb["tally"] = tally_to_json(b.tally);
    jb["mc_scale"] = b.mc_scale;
    jb["key_report"] = report_to_json(b.report);
    jb["estimate"] = {{"y11_lower", b.estimate.y11_lower},
                      {"e11_upper", b.estimate.e11_upper},
                      {"n11_lower", b.estimate.n11_lower},
                      {"feasible", b.estimate.feasible}};
    jb["xi_bar"] = b.xi_bar;
    jb["diagnostics"] = b.diagnostics;
    if (!b.control_trace.samples.empty()) {
      jb["steady_state_qber"] = b.control_trace.steady_state_qber;
    }
    arr.push_back(jb);
  }
  doc["blocks"] = arr;
  return doc.dump(2);
}

std::string allocation_json(const netplan::Allocation& a, const netplan::NetworkReport& rep) {
  json doc;
  doc["schema"] = "combmesh/allocation/v1";
  doc["users"] = a.spec.users;
  doc["channels"] = a.spec.channels;
  doc["tdm_slots"] = a.spec.tdm_slots;
  doc["raw_rate_per_channel_bps"] = rep.raw_rate_per_channel_bps;
  doc["mean_rate_bps"] = rep.mean_rate_bps;
  doc["min_rate_bps"] = rep.min_rate_bps;
  doc["aggregate_rate_bps"] = rep.aggregate_rate_bps;
  json pairs = json::array();
  for (std::size_t i = 0; i < a.assignments.size(); ++i) {
    const auto& as = a.assignments[i];
    pairs.push_back({{"user_a", as.user_a},
                     {"user_b", as.user_b},
                     {"channel", as.channel},
                     {"slot", as.slot},
                     {"duty_cycle", as.duty_cycle},
                     {"effective_rate_bps",
                      i < rep.per_pair_rate_bps.size() ? rep.per_pair_rate_bps[i] : 0.0}});
  }
  doc["pairs"] = pairs;
  return doc.dump(2);
}

void validate_result_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("result document is not valid JSON: ") + e.what());
  }
  if (!doc.contains("schema")) throw ConfigError("result document lacks a schema field");
  const std::string schema = doc["schema"];
  if (schema == "combmesh/result/v1") {
    if (!doc.contains("blocks") || !doc["blocks"].is_array() || doc["blocks"].empty()) {
      throw ConfigError("result document lacks blocks");
    }
    for (const auto& b : doc["blocks"]) {
      const auto& t = b.at("tally");
      for (const auto& c : t.at("cells")) {
        const double sent = c.at("sent"), kept = c.at("kept"), errors = c.at("errors");
        if (!(errors >= 0.0 && errors <= kept + 1e-9 && kept <= sent + 1e-9)) {
          throw ConfigError("result document tally violates 0 <= m <= n <= N");
        }
      }
      const auto& r = b.at("key_report");
      const double len = r.at("key_length_bits"), rate = r.at("key_rate_bps"),
                   acc = r.at("accumulation_s");
      if (len < 0.0) throw ConfigError("result document has negative key length");
      if (acc > 0.0 && std::fabs(rate - len / acc) > 1e-6 * std::fmax(1.0, rate)) {
        throw ConfigError("result document key rate is inconsistent with length/time");
      }
    }
  } else if (schema == "combmesh/allocation/v1") {
    if (!doc.contains("pairs") || !doc["pairs"].is_array()) {
      throw ConfigError("allocation document lacks pairs");
    }
  } else {
    throw ConfigError("unknown result schema '" + schema + "'");
  }
}

}  // namespace combmesh::io
