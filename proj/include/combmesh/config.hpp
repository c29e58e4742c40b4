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

#ifndef COMBMESH_CONFIG_HPP
#define COMBMESH_CONFIG_HPP

#include <map>
#include <string>

#include "combmesh/comb.hpp"
#include "combmesh/engine.hpp"
#include "combmesh/netplan.hpp"

namespace combmesh::config {

/// Parsed scenario configuration: nested key-value sections with named
/// calibration profiles. Section and key names are schema-checked; unknown
/// names are rejected. Physical quantities carry units in the key names.
class ConfigFile {
 public:
  struct Value {
    enum class Kind { Number, String, Boolean } kind = Kind::Number;
    double number = 0.0;
    std::string text;
    bool boolean = false;
  };

  using Section = std::map<std::string, Value>;

  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");

  /// Apply a "section.key=value" command-line override.
  void apply_override(const std::string& spec);

  bool has_section(const std::string& name) const { return sections_.count(name) > 0; }
  const Section* section(const std::string& name) const {
    auto it = sections_.find(name);
    return it == sections_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, Section>& sections() const { return sections_; }

 private:
  std::map<std::string, Section> sections_;
};

/// Everything a run needs, assembled from a config with profile defaults.
struct ScenarioBundle {
  engine::Scenario scenario;
  netplan::NetworkSpec network;
  comb::LockLoopConfig lock;
  int blocks = 1;
  std::uint64_t seed = 1;
};

/// Build the run bundle. The [decoy] section is mandatory; every other
/// section falls back to the "paper-2025" calibration profile. Throws
/// ConfigError naming the offending section/key on any problem.
ScenarioBundle scenario_from_config(const ConfigFile& cfg);

/// Calibration profile lookup used by scenario_from_config; exposed so tests
/// and tools can start from a named profile directly.
ScenarioBundle default_bundle(const std::string& profile = "paper-2025");

}  // namespace combmesh::config

#endif
