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

#include "parmesh/protocol.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace parmesh {

std::vector<std::string> TimingConfig::validate() const {
  std::vector<std::string> errors;
  if (t_proc.count() < 0) errors.emplace_back("t_proc must be non-negative");
  if (t_slot.count() <= 0) errors.emplace_back("t_slot must be positive");
  if (t_beacon.count() <= 0) errors.emplace_back("t_beacon must be positive");
  if (t_beacon > t_slot) errors.emplace_back("t_beacon must not exceed t_slot");
  if (n_slot < 1 || n_slot > 255) errors.emplace_back("n_slot must be in 1..255");
  if (!(p_grant >= 0.0 && p_grant <= 1.0)) errors.emplace_back("p_grant must be in [0, 1]");
  if (n_max < 1) errors.emplace_back("n_max must be positive");
  if (h_na < 2 || h_na > 255) errors.emplace_back("h_na must be in 2..255");
  return errors;
}

std::string_view to_string(ForwardingPolicy p) {
  switch (p) {
    case ForwardingPolicy::kRandomTie: return "random-tie";
    case ForwardingPolicy::kBestRssi: return "best-rssi";
    case ForwardingPolicy::kBroadcastMin: return "broadcast-min";
  }
  return "?";
}

std::optional<ForwardingPolicy> forwarding_policy_from_string(std::string_view s) {
  if (s == "random-tie") return ForwardingPolicy::kRandomTie;
  if (s == "best-rssi") return ForwardingPolicy::kBestRssi;
  if (s == "broadcast-min") return ForwardingPolicy::kBroadcastMin;
  return std::nullopt;
}

NodeMachine::NodeMachine(const TimingConfig& config, NodeId id, bool is_reference,
                         int initial_slot, std::unique_ptr<RandomSource> rng,
                         ForwardingPolicy policy)
    : config_(config),
      id_(id),
      is_reference_(is_reference),
      policy_(policy),
      rng_(std::move(rng)),
      slot_(initial_slot),
      hop_(is_reference ? 0 : config.h_na) {
  if (auto errors = config_.validate(); !errors.empty()) {
    throw std::invalid_argument("invalid timing config: " + errors.front());
  }
  if (!id_.valid()) throw std::invalid_argument("node id must be positive");
  if (initial_slot < 1 || initial_slot > config_.n_slot) {
    std::ostringstream os;
    os << "initial slot " << initial_slot << " outside 1.." << config_.n_slot;
    throw std::invalid_argument(os.str());
  }
  if (!rng_) throw std::invalid_argument("node requires a randomness source");
}

std::vector<Action> NodeMachine::boot(Time now) {
  std::vector<Action> out;
  enter_processing(now, out);
  return out;
}

void NodeMachine::enter(Role role, Duration timer, Time now, std::vector<Action>& out) {
  role_ = role;
  deadline_ = now + timer;
  out.emplace_back(action::EnterRole{role});
  out.emplace_back(action::SetTimer{timer});
}

void NodeMachine::enter_processing(Time now, std::vector<Action>& out) {
  prune_neighbors(now);
  recompute_hop();
  // The grant draw happens once per cycle and holds for the whole period.
  granted_ = rng_->uniform() <= config_.p_grant;
  initiator_pending_ = false;
  enter(Role::P, config_.t_proc, now, out);
}

void NodeMachine::enter_initiator(Time now, std::vector<Action>& out) {
  initiator_pending_ = false;
  role_ = Role::I;
  deadline_ = now + config_.t_beacon;
  out.emplace_back(action::EnterRole{Role::I});
  out.emplace_back(action::StartTransmit{build_frame(), config_.t_beacon});
  out.emplace_back(action::SetTimer{config_.t_beacon});
}

std::vector<Action> NodeMachine::on_timer_expired(Time now) {
  if (now < deadline_) throw std::logic_error("timer expiry before deadline");
  std::vector<Action> out;
  switch (role_) {
    case Role::P:
      if (granted_) {
        initiator_pending_ = true;
        const Duration wait = (slot_ - 1) * config_.t_slot;
        enter(Role::R1, wait, now, out);
        if (wait.count() == 0) enter_initiator(now, out);
      } else {
        enter(Role::R1, config_.t_comm(), now, out);
      }
      break;
    case Role::R1:
      if (initiator_pending_) {
        enter_initiator(now, out);
      } else {
        enter_processing(now, out);
      }
      break;
    case Role::I:
      enter(Role::R2, (config_.n_slot - slot_) * config_.t_slot + config_.t_r(), now, out);
      break;
    case Role::R2:
      enter_processing(now, out);
      break;
  }
  return out;
}

bool NodeMachine::frame_acceptable(const BeaconFrame& b) const {
  if (!b.sender.valid() || b.sender == id_) return false;
  if (b.sender_slot < 1 || b.sender_slot > config_.n_slot) return false;
  if (b.sender_hop > config_.h_na) return false;
  return std::all_of(b.neighbors.begin(), b.neighbors.end(), [&](const NeighborSlot& n) {
    return n.id.valid() && n.id != b.sender && n.slot >= 1 && n.slot <= config_.n_slot;
  });
}

std::vector<Action> NodeMachine::on_frame_received(const Frame& frame, Time now,
                                                   std::optional<double> rssi_db) {
  std::vector<Action> out;
  const BeaconFrame& b = sync_fields(frame);
  if (!is_listening(role_)) return out;
  if (!frame_acceptable(b)) {
    ++stats_.malformed;
    return out;
  }

  auto [it, inserted] = neighbors_.try_emplace(b.sender);
  NeighborEntry& entry = it->second;
  entry.id = b.sender;
  entry.slot = b.sender_slot;
  entry.hop = b.sender_hop;
  entry.last_heard = now;
  entry.rssi_db = rssi_db;
  // Being listed proves the reverse link; not being listed proves nothing
  // new, so the flag only ever clears through pruning.
  if (std::any_of(b.neighbors.begin(), b.neighbors.end(),
                  [&](const NeighborSlot& n) { return n.id == id_; })) {
    entry.bidirectional = true;
  }

  adjust_slot(b);

  if (role_ == Role::R1 && initiator_pending_ && slot_ == b.sender_slot) {
    // Exhausted slot space left us on the sender's slot: sit this turn out.
    initiator_pending_ = false;
    ++stats_.forfeited_turns;
  }
  const Duration timer = resync_duration(b.sender_slot);
  deadline_ = now + timer;
  out.emplace_back(action::SetTimer{timer});

  prune_neighbors(now);
  recompute_hop();

  if (const auto* d = std::get_if<DataFrame>(&frame)) accept_data(*d, out);
  return out;
}

void NodeMachine::accept_data(const DataFrame& d, std::vector<Action>& out) {
  bool addressed = d.next_hop == id_;
  if (d.next_hop == kBroadcast) addressed = hop_ + 1 == d.beacon.sender_hop;
  if (!addressed) return;
  if (seen_before(d.origin, d.sequence)) {
    ++stats_.duplicates;
    return;
  }
  record_reverse_route(d);
  if (is_reference_) {
    ++stats_.delivered;
    out.emplace_back(action::Deliver{d.origin, d.sequence, d.beacon.sender, d.payload});
    return;
  }
  ++stats_.forwarded;
  queue_.push_back({d.origin, d.sequence, d.payload, 0});
}

bool NodeMachine::seen_before(NodeId origin, std::uint16_t sequence) {
  const auto key = std::make_pair(origin, sequence);
  if (std::find(route_cache_.begin(), route_cache_.end(), key) != route_cache_.end()) return true;
  route_cache_.push_back(key);
  if (route_cache_.size() > kRouteCacheSize) route_cache_.pop_front();
  return false;
}

std::vector<Action> NodeMachine::inject(std::vector<std::uint8_t> payload) {
  std::vector<Action> out;
  const std::uint16_t seq = next_sequence_++;
  seen_before(id_, seq);
  if (is_reference_) {
    ++stats_.delivered;
    out.emplace_back(action::Deliver{id_, seq, id_, std::move(payload)});
  } else {
    queue_.push_back({id_, seq, std::move(payload), 0});
  }
  return out;
}

int NodeMachine::adjust_slot(const BeaconFrame& frame) {
  const auto n = static_cast<std::size_t>(config_.n_slot);
  std::vector<bool> reported(n + 1, false);
  auto mark = [&](std::vector<bool>& v, int s) {
    if (s >= 1 && s <= config_.n_slot) v[static_cast<std::size_t>(s)] = true;
  };
  mark(reported, frame.sender_slot);
  for (const auto& nb : frame.neighbors) {
    if (nb.id != id_) mark(reported, nb.slot);
  }
  if (!reported[static_cast<std::size_t>(slot_)]) return slot_;

  std::vector<bool> excluded = reported;
  for (const auto& [nid, e] : neighbors_) mark(excluded, e.slot);
  std::vector<int> free_slots;
  for (int s = 1; s <= config_.n_slot; ++s) {
    if (!excluded[static_cast<std::size_t>(s)]) free_slots.push_back(s);
  }
  if (free_slots.empty()) {
    ++stats_.slot_exhaustions;
    return slot_;
  }
  slot_ = free_slots[rng_->index(free_slots.size())];
  return slot_;
}

Duration NodeMachine::resync_duration(int sender_slot) const {
  const int n = config_.n_slot;
  const int s = slot_;
  const int m = sender_slot;
  const bool awaiting_turn = role_ == Role::R1 && initiator_pending_ && s != m;
  if (!awaiting_turn) {
    // Align the next P entry with the end of the sender's period.
    return (n - m) * config_.t_slot + config_.t_r();
  }
  if (s > m) return (s - m - 1) * config_.t_slot + config_.t_r();
  return (n + s - m - 1) * config_.t_slot + config_.t_proc + config_.t_r();
}

std::vector<NodeId> NodeMachine::prune_neighbors(Time now) {
  std::vector<NodeId> removed;
  const Duration timeout = config_.neighbor_timeout();
  for (auto it = neighbors_.begin(); it != neighbors_.end();) {
    if (now - it->second.last_heard > timeout) {
      removed.push_back(it->first);
      it = neighbors_.erase(it);
    } else {
      ++it;
    }
  }
  return removed;
}

int NodeMachine::recompute_hop() {
  if (is_reference_) return hop_ = 0;
  int best = std::numeric_limits<int>::max();
  for (const auto& [nid, e] : neighbors_) {
    if (e.bidirectional && e.hop < config_.h_na - 1) best = std::min(best, e.hop);
  }
  hop_ = best == std::numeric_limits<int>::max() ? config_.h_na : best + 1;
  return hop_;
}

std::optional<NodeId> NodeMachine::select_next_hop() {
  int best = std::numeric_limits<int>::max();
  for (const auto& [nid, e] : neighbors_) {
    if (e.bidirectional && e.hop < config_.h_na - 1) best = std::min(best, e.hop);
  }
  if (best == std::numeric_limits<int>::max()) return std::nullopt;
  if (policy_ == ForwardingPolicy::kBroadcastMin) return kBroadcast;

  std::vector<const NeighborEntry*> ties;
  for (const auto& [nid, e] : neighbors_) {
    if (e.bidirectional && e.hop == best) ties.push_back(&e);
  }
  if (policy_ == ForwardingPolicy::kBestRssi) {
    const auto* top = *std::max_element(ties.begin(), ties.end(), [](auto* a, auto* b) {
      return a->rssi_db.value_or(-1e300) < b->rssi_db.value_or(-1e300);
    });
    return top->id;
  }
  return ties[rng_->index(ties.size())]->id;
}

Frame NodeMachine::build_frame() {
  BeaconFrame b;
  b.sender = id_;
  b.sender_slot = static_cast<std::uint8_t>(slot_);
  b.sender_hop = static_cast<std::uint8_t>(hop_);
  b.neighbors.reserve(neighbors_.size());
  for (const auto& [nid, e] : neighbors_) {
    b.neighbors.push_back({nid, static_cast<std::uint8_t>(e.slot)});
  }
  if (queue_.empty()) return b;

  if (auto next = select_next_hop()) {
    PendingMessage msg = std::move(queue_.front());
    queue_.pop_front();
    return DataFrame{std::move(b), msg.origin, msg.sequence, *next, std::move(msg.payload)};
  }
  ++stats_.unroutable_attempts;
  if (++queue_.front().attempts >= kMaxRouteAttempts) {
    queue_.pop_front();
    ++stats_.dropped_unroutable;
  }
  return b;
}

void NodeMachine::record_reverse_route(const DataFrame& frame) {
  reverse_routes_[frame.origin] = frame.beacon.sender;
}

std::optional<NodeId> NodeMachine::reverse_next_hop(NodeId origin) const {
  if (auto it = reverse_routes_.find(origin); it != reverse_routes_.end()) return it->second;
  return std::nullopt;
}

std::vector<NodeId> NodeMachine::heard_ids() const {
  std::vector<NodeId> ids;
  for (const auto& [nid, e] : neighbors_) ids.push_back(nid);
  return ids;
}

std::vector<NodeId> NodeMachine::bidirectional_ids() const {
  std::vector<NodeId> ids;
  for (const auto& [nid, e] : neighbors_) {
    if (e.bidirectional) ids.push_back(nid);
  }
  return ids;
}

}  // namespace parmesh
