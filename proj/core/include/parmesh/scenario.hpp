// Copyright 2026 The parmesh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "parmesh/channel.hpp"
#include "parmesh/protocol.hpp"
#include "parmesh/types.hpp"

namespace parmesh {

inline constexpr std::string_view kScenarioSchema = "parmesh-scenario/1";

enum class ScenarioEventKind : std::uint8_t { kOn, kOff, kInject };

std::string_view to_string(ScenarioEventKind k);

struct ScenarioEvent {
  Time time{0};
  ScenarioEventKind kind{ScenarioEventKind::kInject};
  NodeId node;
  std::string payload;

  friend bool operator==(const ScenarioEvent&, const ScenarioEvent&) = default;
};

/// Per-node knobs for scripted walkthroughs and hardware-like setups.
struct NodeOverride {
  NodeId node;
  std::optional<Duration> wake_offset;
  std::optional<int> initial_slot;
  /// Grant decisions for the first cycles, consumed before random draws.
  std::vector<bool> grant_script;
  /// Indices into the free-slot list for the first redraws.
  std::vector<std::size_t> pick_script;
  double tx_attenuation_db{0.0};

  friend bool operator==(const NodeOverride&, const NodeOverride&) = default;
};

/// A fully specified experiment. Reference nodes get ids 1..R in deployment
/// order, sensing nodes R+1..R+S.
struct Scenario {
  std::string name;
  TimingConfig timing;
  ChannelParams channel;
  DeploymentSpec references{GridDeployment{}};
  DeploymentSpec sensing{UniformDeployment{}};
  Duration horizon{from_s(100)};
  Duration wake_window{from_ms(100)};
  std::vector<ScenarioEvent> events;
  int realizations{1};
  std::optional<int> full_realizations;
  std::uint64_t seed{1};
  ForwardingPolicy forwarding_policy{ForwardingPolicy::kRandomTie};
  std::vector<NodeOverride> overrides;
  /// Values of n_slot a sweep iterates over; empty means timing.n_slot only.
  std::vector<int> sweep_n_slot;
  Duration collision_window{from_ms(500)};
  Duration collision_step{from_ms(250)};

  std::size_t reference_count() const { return node_count(references); }
  std::size_t node_total() const { return node_count(references) + node_count(sensing); }
  bool is_reference(NodeId id) const { return id.value >= 1 && id.value <= reference_count(); }
  const NodeOverride* override_for(NodeId id) const;

  /// Every violated constraint with its field path; empty when valid.
  std::vector<std::string> validate() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// JSON round-trip. parse_* throws ScenarioError listing every problem.
Scenario parse_scenario_json(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& scenario);

enum class PresetId : std::uint8_t {
  kFig3aGrid,
  kFig3bRandom,
  kFig4Healing,
  kFig5aSweep,
  kFig5bSweep,
  kFig2TwoNode,
  kDemo5Node,
};

std::string_view to_string(PresetId p);
std::optional<PresetId> preset_from_string(std::string_view s);
std::vector<PresetId> all_presets();
Scenario make_preset(PresetId id);

}  // namespace parmesh
