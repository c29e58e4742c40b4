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

#include "combmesh/netplan.hpp"

#include <algorithm>
#include <string>

namespace combmesh::netplan {

long long pair_count(int users) {
  if (users < 2) throw ContractError("pair_count: need at least 2 users");
  return static_cast<long long>(users) * (users - 1) / 2;
}

std::vector<std::pair<int, int>> enumerate_pairs(int users) {
  const long long n = pair_count(users);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < users; ++i) {
    for (int j = i + 1; j < users; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

Allocation allocate(const NetworkSpec& spec) {
  spec.validate();
  const long long pairs = pair_count(spec.users);
  const long long capacity = static_cast<long long>(spec.channels) * spec.tdm_slots;
  const long long slots_needed = (pairs + spec.channels - 1) / spec.channels;
  if (pairs > capacity) {
    throw FeasibilityError("allocate: " + std::to_string(pairs) + " pairs exceed " +
                               std::to_string(capacity) + " channel-slot cells; need " +
                               std::to_string(slots_needed) + " TDM slots",
                           slots_needed);
  }

  Allocation out;
  out.spec = spec;
  const auto all = enumerate_pairs(spec.users);
  out.assignments.reserve(all.size());

  // Round-robin over channels: channel c carries pairs c, c+C, c+2C, ...
  std::vector<int> load(static_cast<std::size_t>(spec.channels), 0);
  for (std::size_t p = 0; p < all.size(); ++p) {
    const int channel = static_cast<int>(p % static_cast<std::size_t>(spec.channels));
    const int slot = static_cast<int>(p / static_cast<std::size_t>(spec.channels));
    ++load[static_cast<std::size_t>(channel)];
    out.assignments.push_back({all[p].first, all[p].second, channel, slot, 1.0});
  }
  for (auto& a : out.assignments) {
    a.duty_cycle = 1.0 / static_cast<double>(load[static_cast<std::size_t>(a.channel)]);
  }
  return out;
}

NetworkReport network_report(const Allocation& allocation, double raw_rate_per_channel_bps) {
  if (raw_rate_per_channel_bps < 0.0) {
    throw ContractError("network_report: negative raw rate");
  }
  NetworkReport report;
  report.raw_rate_per_channel_bps = raw_rate_per_channel_bps;
  report.per_pair_rate_bps.reserve(allocation.assignments.size());
  bool first = true;
  for (const auto& a : allocation.assignments) {
    const double r = raw_rate_per_channel_bps * a.duty_cycle;
    report.per_pair_rate_bps.push_back(r);
    report.aggregate_rate_bps += r;
    report.min_rate_bps = first ? r : std::min(report.min_rate_bps, r);
    first = false;
  }
  if (!report.per_pair_rate_bps.empty()) {
    report.mean_rate_bps =
        report.aggregate_rate_bps / static_cast<double>(report.per_pair_rate_bps.size());
  }
  return report;
}

}  // namespace combmesh::netplan
