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

#ifndef COMBMESH_LP_HPP
#define COMBMESH_LP_HPP

#include <utility>
#include <vector>

namespace combmesh::lp {

enum class RowType { LessEqual, Equal, GreaterEqual };

struct Row {
  std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
  RowType type = RowType::LessEqual;
  double rhs = 0.0;
};

/// Dense two-phase simplex for small problems. Variables are nonnegative;
/// upper bounds are expressed as rows by the caller.
struct Problem {
  int num_vars = 0;
  std::vector<Row> rows;
  std::vector<std::pair<int, double>> objective;  // sparse objective
  bool maximize = false;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
  Status status = Status::Infeasible;
  double value = 0.0;
  std::vector<double> x;
};

Solution solve(const Problem& p);

}  // namespace combmesh::lp

#endif
