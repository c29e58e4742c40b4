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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "combmesh/netplan.hpp"

using namespace combmesh;
using namespace combmesh::netplan;

TEST_CASE("pair enumeration") {
  CHECK(pair_count(2) == 1);
  CHECK(pair_count(4) == 6);
  CHECK(pair_count(200) == 19900);
  CHECK_THROWS_AS(pair_count(1), ContractError);

  const auto pairs = enumerate_pairs(5);
  CHECK(pairs.size() == 10);
  std::set<std::pair<int, int>> seen(pairs.begin(), pairs.end());
  CHECK(seen.size() == pairs.size());
  for (const auto& [i, j] : pairs) CHECK(i < j);
}

TEST_CASE("small mesh at full duty") {
  const Allocation a = allocate({4, 6, 1});
  CHECK(a.assignments.size() == 6);
  for (const auto& as : a.assignments) CHECK(as.duty_cycle == 1.0);
  const auto rep = network_report(a, 62.0);
  CHECK(rep.mean_rate_bps == doctest::Approx(62.0));
  CHECK(rep.min_rate_bps == doctest::Approx(62.0));
}

TEST_CASE("balanced allocation of the 200-user mesh") {
  const Allocation a = allocate({200, 200, 100});
  CHECK(a.assignments.size() == 19900);

  std::map<int, int> load;
  std::set<std::pair<int, int>> cells;
  std::set<std::pair<int, int>> pairs;
  for (const auto& as : a.assignments) {
    ++load[as.channel];
    CHECK(cells.insert({as.channel, as.slot}).second);  // bijection onto cells
    CHECK(pairs.insert({as.user_a, as.user_b}).second);
    CHECK(as.slot < 100);
  }
  CHECK(pairs.size() == 19900);
  int lo = 1 << 30, hi = 0;
  for (const auto& [c, n] : load) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  CHECK(hi - lo <= 1);
  CHECK(hi == 100);

  for (const auto& as : a.assignments) {
    CHECK(as.duty_cycle == doctest::Approx(1.0 / load[as.channel]));
  }
}

TEST_CASE("infeasible slot budget names the requirement") {
  try {
    allocate({200, 200, 99});
    FAIL("expected FeasibilityError");
  } catch (const FeasibilityError& e) {
    CHECK(e.slots_needed == 100);
  }
}

TEST_CASE("network report scales with duty cycle and respects capacity") {
  const Allocation a = allocate({200, 200, 100});
  const auto rep = network_report(a, 62.0);
  for (std::size_t i = 0; i < a.assignments.size(); ++i) {
    CHECK(rep.per_pair_rate_bps[i] ==
          doctest::Approx(62.0 * a.assignments[i].duty_cycle));
  }
  CHECK(rep.aggregate_rate_bps <= 62.0 * 200 * (1.0 + 1e-12) + 1e-6);

  const Allocation half = allocate({3, 1, 3});  // 3 pairs share one channel
  const auto hrep = network_report(half, 62.0);
  for (double r : hrep.per_pair_rate_bps) CHECK(r == doctest::Approx(62.0 / 3.0));
}

TEST_CASE("allocation is deterministic and label-independent") {
  const Allocation a = allocate({30, 10, 50});
  const Allocation b = allocate({30, 10, 50});
  REQUIRE(a.assignments.size() == b.assignments.size());
  for (std::size_t i = 0; i < a.assignments.size(); ++i) {
    CHECK(a.assignments[i].channel == b.assignments[i].channel);
    CHECK(a.assignments[i].slot == b.assignments[i].slot);
  }
  // the duty-cycle multiset depends only on the spec, not on user labels
  std::multiset<double> duties;
  for (const auto& as : a.assignments) duties.insert(as.duty_cycle);
  const Allocation c = allocate({30, 10, 50});
  std::multiset<double> duties2;
  for (const auto& as : c.assignments) duties2.insert(as.duty_cycle);
  CHECK(duties == duties2);
}
