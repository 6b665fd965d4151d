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


// Builders shared by the unit suites.

#pragma once

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parmesh/event_log.hpp"
#include "parmesh/frame.hpp"
#include "parmesh/protocol.hpp"
#include "parmesh/random.hpp"
#include "parmesh/scenario.hpp"

namespace parmesh::test {

inline std::unique_ptr<RandomSource> scripted(std::deque<double> uniforms,
                                              std::deque<std::size_t> picks = {},
                                              std::uint64_t seed = 99) {
  return std::make_unique<ScriptedRandom>(std::move(uniforms), std::move(picks),
                                          SeededRandom(seed, 0));
}

inline std::unique_ptr<RandomSource> seeded(std::uint64_t seed = 7) {
  return std::make_unique<SeededRandom>(seed, 0);
}

/// Grant draws: 0.0 is always granted, 2.0 never.
inline constexpr double kGrant = 0.0;
inline constexpr double kDeny = 2.0;

inline TimingConfig timing(int n_slot, Duration t_slot = from_ms(10),
                           Duration t_beacon = from_ms(5), Duration t_proc = from_ms(10)) {
  TimingConfig c;
  c.n_slot = n_slot;
  c.t_slot = t_slot;
  c.t_beacon = t_beacon;
  c.t_proc = t_proc;
  return c;
}

inline BeaconFrame beacon(int sender, int slot, int hop,
                          std::initializer_list<std::pair<int, int>> neighbors = {}) {
  BeaconFrame b;
  b.sender = NodeId{static_cast<std::uint8_t>(sender)};
  b.sender_slot = static_cast<std::uint8_t>(slot);
  b.sender_hop = static_cast<std::uint8_t>(hop);
  for (auto [id, s] : neighbors) {
    b.neighbors.push_back({NodeId{static_cast<std::uint8_t>(id)}, static_cast<std::uint8_t>(s)});
  }
  return b;
}

inline NodeId nid(int v) { return NodeId{static_cast<std::uint8_t>(v)}; }

/// Deterministic channel: no shadowing, fading or imbalance, so links
/// depend on distance alone (decodable up to about 47 m).
inline Scenario plain_scenario(std::vector<Point> sensing, std::vector<Point> references = {},
                               int n_slot = 4) {
  Scenario s;
  s.name = "unit";
  s.timing.n_slot = n_slot;
  s.channel.shadow_sigma_db = 0.0;
  s.channel.imbalance_sigma_db = 0.0;
  s.channel.fading_mode = FadingMode::kNone;
  s.references = ExplicitDeployment{std::move(references)};
  s.sensing = ExplicitDeployment{std::move(sensing)};
  s.horizon = from_ms(200);
  s.seed = 5;
  return s;
}

inline NodeOverride pinned(int id, double wake_ms, int slot, std::vector<bool> grants,
                           std::vector<std::size_t> picks = {}) {
  NodeOverride o;
  o.node = nid(id);
  o.wake_offset = from_ms(wake_ms);
  o.initial_slot = slot;
  o.grant_script = std::move(grants);
  o.pick_script = std::move(picks);
  return o;
}

inline std::vector<LogRecord> records(const EventLog& log, LogKind kind,
                                      std::optional<int> node = std::nullopt) {
  std::vector<LogRecord> out;
  for (const auto& r : log.records()) {
    if (r.kind == kind && (!node || r.node.value == *node)) out.push_back(r);
  }
  return out;
}

/// Fresh scratch directory for one test.
inline std::filesystem::path scratch(const std::string& name) {
  const char* env = std::getenv("PARMESH_TEST_TMP");
  const std::filesystem::path base =
      env && *env ? std::filesystem::path(env)
                  : std::filesystem::temp_directory_path() / "parmesh-test";
  const auto dir = base / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace parmesh::test
