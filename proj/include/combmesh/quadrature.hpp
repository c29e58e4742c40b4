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

#ifndef COMBMESH_QUADRATURE_HPP
#define COMBMESH_QUADRATURE_HPP

#include <cmath>
#include <cstddef>

#include "combmesh/errors.hpp"

namespace combmesh {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Mean of f over one period [0, 2pi) on an n-point rectangle rule.
/// For smooth periodic integrands this converges spectrally in n.
template <class F>
double periodic_mean_fixed(F&& f, std::size_t n) {
  double acc = 0.0;
  const double h = kTwoPi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) acc += f(h * static_cast<double>(i));
  return acc / static_cast<double>(n);
}

/// Mean of f over [0, 2pi) with grid-doubling refinement. Converged when the
/// change between successive refinements drops below rel_tol relative to the
/// current value. Throws NumericError if the tolerance is not reached.
template <class F>
double periodic_mean(F&& f, double rel_tol = 1e-9, std::size_t n0 = 32,
                     int max_doublings = 14) {
  std::size_t n = n0;
  double prev = periodic_mean_fixed(f, n);
  for (int it = 0; it < max_doublings; ++it) {
    // Only the midpoints of the previous grid are new.
    const std::size_t n2 = 2 * n;
    const double h2 = kTwoPi / static_cast<double>(n2);
    double acc = 0.0;
    for (std::size_t i = 1; i < n2; i += 2) acc += f(h2 * static_cast<double>(i));
    const double cur = 0.5 * prev + acc / static_cast<double>(n2);
    const double scale = std::fmax(std::fabs(cur), 1e-300);
    if (std::fabs(cur - prev) <= rel_tol * scale) return cur;
    prev = cur;
    n = n2;
  }
  throw NumericError("periodic_mean: quadrature did not converge");
}

/// Composite Simpson rule on [a, b] with n (even) intervals.
template <class F>
double simpson(F&& f, double a, double b, std::size_t n) {
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double acc = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) {
    acc += f(a + h * static_cast<double>(i)) * ((i % 2) ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

}  // namespace combmesh

#endif
