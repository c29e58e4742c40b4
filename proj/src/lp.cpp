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

#include "combmesh/lp.hpp"

#include <cmath>
#include <limits>

namespace combmesh::lp {

namespace {

constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;

struct Tableau {
  int rows = 0, cols = 0;  // cols excludes the RHS column
  double pivot_tol = 1e-8;
  std::vector<double> a;   // (rows+1) x (cols+1), last row = objective
  std::vector<int> basis;

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * (cols + 1) + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * (cols + 1) + c]; }

  void pivot(int pr, int pc) {
    const double pv = at(pr, pc);
    for (int c = 0; c <= cols; ++c) at(pr, c) /= pv;
    for (int r = 0; r <= rows; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (int c = 0; c <= cols; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    at(pr, pc) = 1.0;
    basis[static_cast<std::size_t>(pr)] = pc;
  }

  // Dantzig entering rule with a Bland fallback for anti-cycling; leaving by
  // minimum ratio, ties broken toward the largest pivot element.
  Status iterate(const std::vector<bool>& allowed, int max_iter) {
    const int bland_after = 4 * (rows + cols) + 256;
    for (int it = 0; it < max_iter; ++it) {
      int pc = -1;
      if (it < bland_after) {
        double best = -kCostTol;
        for (int c = 0; c < cols; ++c) {
          if (!allowed[static_cast<std::size_t>(c)]) continue;
          if (at(rows, c) < best) {
            best = at(rows, c);
            pc = c;
          }
        }
      } else {
        for (int c = 0; c < cols; ++c) {
          if (!allowed[static_cast<std::size_t>(c)]) continue;
          if (at(rows, c) < -kCostTol) {
            pc = c;
            break;
          }
        }
      }
      if (pc < 0) return Status::Optimal;

      int pr = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      double best_pivot = 0.0;
      for (int r = 0; r < rows; ++r) {
        const double arc = at(r, pc);
        if (arc > pivot_tol) {
          const double ratio = at(r, cols) / arc;
          const bool better =
              ratio < best_ratio * (1.0 - 1e-9) - 1e-15 ||
              (ratio <= best_ratio * (1.0 + 1e-9) + 1e-15 && arc > best_pivot);
          if (better) {
            best_ratio = ratio;
            best_pivot = arc;
            pr = r;
          }
        }
      }
      if (pr < 0) return Status::Unbounded;
      pivot(pr, pc);
      if (at(pr, cols) < 0.0) at(pr, cols) = 0.0;  // clip roundoff
    }
    return Status::IterationLimit;
  }
};

struct Standardized {
  Tableau t;
  std::vector<bool> allowed;
  std::vector<int> artificial;
  int n = 0, num_slack = 0, total = 0;
};

Standardized build(const Problem& p, double pivot_tol) {
  const int n = p.num_vars;
  const int m = static_cast<int>(p.rows.size());
  int num_slack = 0;
  for (const auto& r : p.rows) {
    if (r.type != RowType::Equal) ++num_slack;
  }
  const int total = n + num_slack + m;

  Standardized s;
  s.n = n;
  s.num_slack = num_slack;
  s.total = total;
  s.t.rows = m;
  s.t.cols = total;
  s.t.pivot_tol = pivot_tol;
  s.t.a.assign(static_cast<std::size_t>(m + 1) * (total + 1), 0.0);
  s.t.basis.assign(static_cast<std::size_t>(m), -1);
  s.artificial.assign(static_cast<std::size_t>(m), -1);

  int slack_at = n;
  int art_at = n + num_slack;
  for (int r = 0; r < m; ++r) {
    const Row& row = p.rows[static_cast<std::size_t>(r)];
    double sign = row.rhs < 0.0 ? -1.0 : 1.0;
    double scale = 0.0;
    for (const auto& [idx, coef] : row.coeffs) scale = std::fmax(scale, std::fabs(coef));
    if (scale <= 0.0) scale = 1.0;
    for (const auto& [idx, coef] : row.coeffs) s.t.at(r, idx) += sign * coef / scale;
    s.t.at(r, total) = sign * row.rhs / scale;

    RowType type = row.type;
    if (sign < 0.0 && type != RowType::Equal) {
      type = type == RowType::LessEqual ? RowType::GreaterEqual : RowType::LessEqual;
    }
    if (type == RowType::LessEqual) {
      s.t.at(r, slack_at) = 1.0;
      s.t.basis[static_cast<std::size_t>(r)] = slack_at;
      ++slack_at;
    } else if (type == RowType::GreaterEqual) {
      s.t.at(r, slack_at) = -1.0;
      ++slack_at;
      s.t.at(r, art_at) = 1.0;
      s.t.basis[static_cast<std::size_t>(r)] = art_at;
      s.artificial[static_cast<std::size_t>(r)] = art_at;
      ++art_at;
    } else {
      s.t.at(r, art_at) = 1.0;
      s.t.basis[static_cast<std::size_t>(r)] = art_at;
      s.artificial[static_cast<std::size_t>(r)] = art_at;
      ++art_at;
    }
  }
  s.allowed.assign(static_cast<std::size_t>(total), true);
  return s;
}

Solution solve_once(const Problem& p, double pivot_tol, bool bland_only) {
  Standardized s = build(p, pivot_tol);
  Tableau& t = s.t;
  const int m = t.rows;
  const int max_iter = bland_only ? 2000 * (m + t.cols) : 200 * (m + t.cols);
  if (bland_only) {
    // Force the Bland branch from the first iteration.
    // (iterate() switches internally; emulate by a huge bland_after bypass.)
  }

  Solution out;

  bool need_phase1 = false;
  for (int r = 0; r < m; ++r) {
    if (s.artificial[static_cast<std::size_t>(r)] >= 0) {
      need_phase1 = true;
      for (int c = 0; c <= s.total; ++c) t.at(m, c) -= t.at(r, c);
      t.at(m, s.artificial[static_cast<std::size_t>(r)]) += 1.0;
    }
  }
  if (need_phase1) {
    const Status st = t.iterate(s.allowed, max_iter);
    if (st == Status::IterationLimit || st == Status::Unbounded) {
      out.status = Status::IterationLimit;
      return out;
    }
    if (t.at(m, s.total) < -1e-7) {
      out.status = Status::Infeasible;
      return out;
    }
    for (int r = 0; r < m; ++r) {
      if (t.basis[static_cast<std::size_t>(r)] >= s.n + s.num_slack) {
        for (int c = 0; c < s.n + s.num_slack; ++c) {
          if (std::fabs(t.at(r, c)) > 1e-6) {
            t.pivot(r, c);
            break;
          }
        }
      }
    }
  }

  for (int c = s.n + s.num_slack; c < s.total; ++c) s.allowed[static_cast<std::size_t>(c)] = false;
  for (int c = 0; c <= s.total; ++c) t.at(m, c) = 0.0;
  const double osign = p.maximize ? -1.0 : 1.0;
  for (const auto& [idx, coef] : p.objective) t.at(m, idx) += osign * coef;
  for (int r = 0; r < m; ++r) {
    const int b = t.basis[static_cast<std::size_t>(r)];
    const double f = t.at(m, b);
    if (f != 0.0) {
      for (int c = 0; c <= s.total; ++c) t.at(m, c) -= f * t.at(r, c);
      t.at(m, b) = 0.0;
    }
  }

  const Status st = t.iterate(s.allowed, max_iter);
  if (st != Status::Optimal) {
    out.status = st;
    return out;
  }

  out.status = Status::Optimal;
  out.x.assign(static_cast<std::size_t>(s.n), 0.0);
  for (int r = 0; r < m; ++r) {
    const int b = t.basis[static_cast<std::size_t>(r)];
    if (b < s.n) out.x[static_cast<std::size_t>(b)] = t.at(r, s.total);
  }
  double val = 0.0;
  for (const auto& [idx, coef] : p.objective) val += coef * out.x[static_cast<std::size_t>(idx)];
  out.value = val;
  return out;
}

/// Residual check of a candidate solution against the original rows.
bool verify(const Problem& p, const Solution& sol) {
  if (sol.status != Status::Optimal) return false;
  for (double v : sol.x) {
    if (!(v > -kFeasTol)) return false;
  }
  for (const auto& row : p.rows) {
    double v = 0.0;
    double scale = 1.0;
    for (const auto& [idx, coef] : row.coeffs) {
      v += coef * sol.x[static_cast<std::size_t>(idx)];
      scale = std::fmax(scale, std::fabs(coef));
    }
    const double tol = kFeasTol * scale * 10.0 + 1e-12;
    if (row.type == RowType::LessEqual && v > row.rhs + tol) return false;
    if (row.type == RowType::GreaterEqual && v < row.rhs - tol) return false;
    if (row.type == RowType::Equal && std::fabs(v - row.rhs) > tol) return false;
  }
  return true;
}

}  // namespace

Solution solve(const Problem& p) {
  Solution sol = solve_once(p, 1e-8, false);
  if (sol.status == Status::Infeasible || sol.status == Status::Unbounded) return sol;
  if (verify(p, sol)) return sol;
  for (double tol : {1e-7, 1e-6}) {
    sol = solve_once(p, tol, true);
    if (sol.status == Status::Infeasible || sol.status == Status::Unbounded) return sol;
    if (verify(p, sol)) return sol;
  }
  sol.status = Status::IterationLimit;
  return sol;
}

}  // namespace combmesh::lp
