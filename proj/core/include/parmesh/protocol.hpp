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
 *   Per-node protocol state machine. The machine has no clock and performs
 *   no I/O: the host feeds it timer expiries and decoded frames together
 *   with the current time, and executes the actions it returns.
 */

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "parmesh/frame.hpp"
#include "parmesh/random.hpp"
#include "parmesh/types.hpp"

namespace parmesh {

struct TimingConfig {
  Duration t_proc{from_ms(10)};
  Duration t_slot{from_ms(10)};
  int n_slot{12};
  Duration t_beacon{from_ms(5)};
  double p_grant{0.5};
  int n_max{10};
  int h_na{30};

  /// Responder time left in a slot after the initiator's beacon.
  Duration t_r() const { return t_slot - t_beacon; }
  Duration t_comm() const { return n_slot * t_slot; }
  Duration period() const { return t_proc + t_comm(); }
  /// A neighbor silent for longer than this is forgotten.
  Duration neighbor_timeout() const { return n_max * period(); }

  /// Every violated constraint, described; empty when valid.
  std::vector<std::string> validate() const;

  friend bool operator==(const TimingConfig&, const TimingConfig&) = default;
};

enum class ForwardingPolicy : std::uint8_t { kRandomTie, kBestRssi, kBroadcastMin };

std::string_view to_string(ForwardingPolicy p);
std::optional<ForwardingPolicy> forwarding_policy_from_string(std::string_view s);

struct NeighborEntry {
  NodeId id;
  int slot{0};
  int hop{0};
  Time last_heard{0};
  bool bidirectional{false};
  std::optional<double> rssi_db;
};

struct PendingMessage {
  NodeId origin;
  std::uint16_t sequence{0};
  std::vector<std::uint8_t> payload;
  int attempts{0};
};

namespace action {
struct StartTransmit {
  Frame frame;
  Duration airtime;
};
struct SetTimer {
  Duration duration;
};
struct EnterRole {
  Role role;
};
struct Deliver {
  NodeId origin;
  std::uint16_t sequence{0};
  NodeId from;
  std::vector<std::uint8_t> payload;
};
}  // namespace action

using Action =
    std::variant<action::StartTransmit, action::SetTimer, action::EnterRole, action::Deliver>;

struct NodeStats {
  std::uint64_t malformed{0};
  std::uint64_t duplicates{0};
  std::uint64_t forwarded{0};
  std::uint64_t delivered{0};
  std::uint64_t unroutable_attempts{0};
  std::uint64_t dropped_unroutable{0};
  std::uint64_t slot_exhaustions{0};
  std::uint64_t forfeited_turns{0};
};

class NodeMachine {
 public:
  static constexpr std::size_t kRouteCacheSize = 32;
  static constexpr int kMaxRouteAttempts = 100;

  /// Throws std::invalid_argument for an invalid config, id or slot.
  NodeMachine(const TimingConfig& config, NodeId id, bool is_reference, int initial_slot,
              std::unique_ptr<RandomSource> rng,
              ForwardingPolicy policy = ForwardingPolicy::kRandomTie);

  /// Wake-up: enters P with a t_proc timer.
  std::vector<Action> boot(Time now);

  std::vector<Action> on_timer_expired(Time now);

  /// Reception of a decoded frame while listening. Frames failing the
  /// protocol-level checks (slot or hop out of range, own id as sender)
  /// leave every table untouched.
  std::vector<Action> on_frame_received(const Frame& frame, Time now,
                                        std::optional<double> rssi_db = std::nullopt);

  /// Hands a locally sensed payload to the node. A reference delivers it on
  /// the spot; a sensing node queues it for its next initiator turn.
  std::vector<Action> inject(std::vector<std::uint8_t> payload);

  int adjust_slot(const BeaconFrame& frame);
  /// Timer value to apply after hearing a sender on `sender_slot`; does not
  /// modify the node.
  Duration resync_duration(int sender_slot) const;
  std::vector<NodeId> prune_neighbors(Time now);
  int recompute_hop();
  std::optional<NodeId> select_next_hop();
  /// Frame for the coming initiator turn; pops the head message when it can
  /// be routed.
  Frame build_frame();
  void record_reverse_route(const DataFrame& frame);
  std::optional<NodeId> reverse_next_hop(NodeId origin) const;

  NodeId id() const { return id_; }
  bool is_reference() const { return is_reference_; }
  Role role() const { return role_; }
  int slot() const { return slot_; }
  int hop() const { return hop_; }
  bool granted() const { return granted_; }
  bool initiator_pending() const { return initiator_pending_; }
  Time timer_deadline() const { return deadline_; }
  Duration timer_remaining(Time now) const {
    return deadline_ > now ? deadline_ - now : Duration{0};
  }
  const TimingConfig& config() const { return config_; }
  ForwardingPolicy policy() const { return policy_; }
  const std::map<NodeId, NeighborEntry>& neighbors() const { return neighbors_; }
  std::vector<NodeId> heard_ids() const;
  std::vector<NodeId> bidirectional_ids() const;
  const std::deque<PendingMessage>& queue() const { return queue_; }
  const NodeStats& stats() const { return stats_; }

 private:
  void enter(Role role, Duration timer, Time now, std::vector<Action>& out);
  void enter_processing(Time now, std::vector<Action>& out);
  void enter_initiator(Time now, std::vector<Action>& out);
  bool frame_acceptable(const BeaconFrame& b) const;
  bool seen_before(NodeId origin, std::uint16_t sequence);
  void accept_data(const DataFrame& d, std::vector<Action>& out);

  TimingConfig config_;
  NodeId id_;
  bool is_reference_;
  ForwardingPolicy policy_;
  std::unique_ptr<RandomSource> rng_;

  Role role_{Role::P};
  int slot_;
  int hop_;
  bool granted_{false};
  bool initiator_pending_{false};
  Time deadline_{0};

  std::map<NodeId, NeighborEntry> neighbors_;
  std::deque<PendingMessage> queue_;
  std::deque<std::pair<NodeId, std::uint16_t>> route_cache_;
  std::map<NodeId, NodeId> reverse_routes_;
  std::uint16_t next_sequence_{0};
  NodeStats stats_;
};

}  // namespace parmesh
