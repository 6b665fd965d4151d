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

/**
 * @file
 *   Discrete-event driver for a network of NodeMachines over a LinkTable.
 *
 *   Radio model: half duplex, zero propagation delay, no capture. A frame
 *   reaches a receiver iff the link is accessible, the receiver listened
 *   (R1 or R2) over the whole open interval of the transmission, and no
 *   other transmission accessible at that receiver overlapped it.
 */

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "parmesh/channel.hpp"
#include "parmesh/event_log.hpp"
#include "parmesh/metrics.hpp"
#include "parmesh/protocol.hpp"
#include "parmesh/scenario.hpp"

namespace parmesh {

struct Delivery {
  Time time{0};
  NodeId at;
  NodeId origin;
  std::uint16_t sequence{0};
  NodeId from;
  /// Data transmissions of this message up to and including the last hop.
  int transmissions{0};
};

class Simulator {
 public:
  /// Realizes placement and channel for `seed`. Throws ScenarioError when
  /// the scenario is invalid.
  Simulator(const Scenario& scenario, std::uint64_t seed, LogDetail detail = LogDetail::kFull);
  /// Runs over a caller-supplied link table sized for the scenario.
  Simulator(const Scenario& scenario, LinkTable links, std::uint64_t seed,
            LogDetail detail = LogDetail::kFull);

  /// Processes every event up to and including the horizon.
  void run();
  /// Processes every event with time <= t (capped at the horizon).
  void run_until(Time t);
  Time now() const { return now_; }

  /// Adds an event beyond those in the scenario. Must not lie in the past.
  void schedule(const ScenarioEvent& ev);

  const Scenario& scenario() const { return scenario_; }
  const LinkTable& links() const { return links_; }
  const EventLog& log() const { return log_; }
  std::size_t node_count() const { return nodes_.size(); }
  /// Null while the node is off or has not woken yet.
  const NodeMachine* node(NodeId id) const;
  std::vector<bool> up_mask() const;
  /// Per-node state for the metrics, indexed by id - 1.
  std::vector<NodeView> node_views() const;
  const std::vector<Delivery>& deliveries() const { return deliveries_; }
  std::uint64_t transmissions() const { return tx_count_; }
  std::uint64_t receptions() const { return rx_count_; }

 private:
  enum class EventType : std::uint8_t { kTxEnd, kTimer, kBoot, kScenario };

  struct Event {
    Time time;
    std::uint8_t rank;
    std::uint8_t node;
    std::uint64_t order;
    EventType type;
    std::uint64_t token;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };

  struct NodeRuntime {
    std::optional<NodeMachine> machine;
    bool powered{true};
    Role role{Role::P};
    Time listening_since{Time::max()};
    std::uint64_t timer_gen{0};
    std::uint64_t epoch{0};
    std::uint32_t boots{0};
    int pending_slot{1};
    bool slot_forced{false};
    std::optional<std::uint64_t> active_tx;
  };

  struct Transmission {
    std::uint64_t id{0};
    std::size_t node{0};
    Time start{0};
    Time end{0};
    std::vector<std::uint8_t> bytes;
    std::vector<std::uint8_t> reach;
    std::vector<double> snr_db;
    bool aborted{false};
  };

  struct Snapshot {
    int slot;
    int hop;
    NodeStats stats;
    std::vector<std::pair<NodeId, bool>> neighbors;
  };

  void init();
  void push(Time t, EventType type, std::size_t node, std::uint64_t token);
  void dispatch(const Event& ev);
  void boot(std::size_t idx);
  void timer(std::size_t idx, std::uint64_t token);
  void tx_end(std::uint64_t tx_id);
  void apply(std::size_t scenario_event);
  void apply_event(const ScenarioEvent& ev);
  void power_off(std::size_t idx);
  void power_on(std::size_t idx);
  Snapshot snapshot(std::size_t idx) const;
  void execute(std::size_t idx, std::vector<Action> actions, const Snapshot& before, bool resync);
  void start_transmission(std::size_t idx, const Frame& frame, Duration airtime);
  Transmission* find_tx(std::uint64_t id);
  void schedule_boot(std::size_t idx, Duration offset);

  Scenario scenario_;
  std::uint64_t seed_;
  LinkTable links_;
  EventLog log_;
  std::vector<NodeRuntime> nodes_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t order_{0};
  Time now_{0};
  std::mt19937_64 boot_rng_;
  std::mt19937_64 fading_rng_;
  std::deque<Transmission> txs_;
  std::uint64_t next_tx_id_{0};
  std::uint64_t tx_count_{0};
  std::uint64_t rx_count_{0};
  std::map<std::pair<NodeId, std::uint16_t>, int> data_tx_;
  std::vector<Delivery> deliveries_;
  std::vector<ScenarioEvent> extra_events_;
};

/// Result of one realization for callers that only need the outputs.
struct RunOutput {
  EventLog log;
  LinkTable links;
  std::vector<Delivery> deliveries;
};

RunOutput run(const Scenario& scenario, std::uint64_t seed, LogDetail detail = LogDetail::kFull);

/// Placement and link realization exactly as the simulator draws them.
LinkTable realize_links(const Scenario& scenario, std::uint64_t seed);

}  // namespace parmesh
