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

#ifndef COMBMESH_IO_HPP
#define COMBMESH_IO_HPP

#include <string>
#include <vector>

#include "combmesh/comb.hpp"
#include "combmesh/control.hpp"
#include "combmesh/engine.hpp"
#include "combmesh/interference.hpp"
#include "combmesh/netplan.hpp"

namespace combmesh::io {

/// Minimal RFC-4180 CSV writer: quotes fields containing separators/quotes,
/// renders numbers with round-trip precision.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& field(const std::string& s);
  CsvWriter& field(double v);
  CsvWriter& field(long long v);
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  void end_row();

  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
  std::string out_;
};

/// Round-trip formatting of a double (shortest %.17g).
std::string format_double(double v);

// One-file-per-figure data tables.
void write_lock_csv(const std::string& path, const comb::LockTrajectory& t);
void write_hom_csv(const std::string& path, const interference::HomScanResult& r);
void write_compensation_csv(const std::string& path, const control::CompensationTrace& t);
void write_keyrate_distance_csv(const std::string& path, const std::string& fiber,
                                const std::vector<protocol::RatePoint>& std_curve,
                                const std::vector<protocol::RatePoint>& ull_curve);
void write_keyreport_csv(const std::string& path, const std::vector<engine::RunResult>& blocks);
void write_tally_csv(const std::string& path, const std::vector<engine::RunResult>& blocks);
void write_allocation_csv(const std::string& path, const netplan::Allocation& a,
                          const netplan::NetworkReport& rep);

/// Versioned JSON documents.
std::string result_json(const engine::Scenario& s, const std::vector<engine::RunResult>& blocks);
std::string allocation_json(const netplan::Allocation& a, const netplan::NetworkReport& rep);

/// Reload an emitted result document and re-check its invariants (schema tag,
/// tally consistency, report/rate coherence). Throws ConfigError on problems.
void validate_result_json(const std::string& text);

void write_text(const std::string& path, const std::string& text);

}  // namespace combmesh::io

#endif
