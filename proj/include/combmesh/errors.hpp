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

#ifndef COMBMESH_ERRORS_HPP
#define COMBMESH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace combmesh {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Precondition or domain violation (bad argument, invariant breach).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

/// Malformed or inconsistent configuration input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// A requested plan cannot be satisfied with the given resources.
class FeasibilityError : public Error {
 public:
  FeasibilityError(const std::string& msg, long long slots_needed)
      : Error(msg), slots_needed(slots_needed) {}
  long long slots_needed = 0;
};

/// Numeric routine failed to converge.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// A simulated feedback loop diverged; carries the simulation time of the event.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& msg, double time_s)
      : Error(msg), time_s(time_s) {}
  double time_s = 0.0;
};

}  // namespace combmesh

#endif
