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

#ifndef COMBMESH_NETPLAN_HPP
#define COMBMESH_NETPLAN_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "combmesh/errors.hpp"

namespace combmesh::netplan {

struct NetworkSpec {
  int users = 200;
  int channels = 200;     // usable frequency channels at the hub
  int tdm_slots = 100;    // time-division slots per frame

  void validate() const {
    if (users < 2) throw ContractError("NetworkSpec: need at least 2 users");
    if (channels < 1 || tdm_slots < 1) {
      throw ContractError("NetworkSpec: channels and tdm_slots must be positive");
    }
  }
};

/// Number of unordered user pairs, N(N-1)/2.
long long pair_count(int users);

/// All unordered pairs (i < j) in deterministic lexicographic order.
std::vector<std::pair<int, int>> enumerate_pairs(int users);

struct Assignment {
  int user_a = 0;
  int user_b = 0;
  int channel = 0;
  int slot = 0;
  double duty_cycle = 1.0;  // 1 / pairs sharing the channel
};

struct Allocation {
  NetworkSpec spec;
  std::vector<Assignment> assignments;
};

/// Balanced round-robin allocation of pairs onto (channel, slot) cells; slot
/// usage differs by at most one across channels. Throws FeasibilityError
/// (carrying the minimum slot count needed) when pairs exceed capacity.
Allocation allocate(const NetworkSpec& spec);

struct NetworkReport {
  double raw_rate_per_channel_bps = 0.0;
  std::vector<double> per_pair_rate_bps;
  double mean_rate_bps = 0.0;
  double min_rate_bps = 0.0;
  double aggregate_rate_bps = 0.0;
  bool feasible = true;
};

/// Effective per-pair key rates: raw per-channel rate scaled by each pair's
/// TDM duty cycle.
NetworkReport network_report(const Allocation& allocation, double raw_rate_per_channel_bps);

}  // namespace combmesh::netplan

#endif
