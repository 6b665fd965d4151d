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

#include "parmesh/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace parmesh {
namespace {

// Randomness streams carved out of a realization seed.
constexpr std::uint64_t kPlacementStream = 1;
constexpr std::uint64_t kLinkStream = 2;
constexpr std::uint64_t kBootStream = 3;
constexpr std::uint64_t kFadingStream = 4;
constexpr std::uint64_t kNodeStreamBase = 1000;

// Warning reason codes in the log.
constexpr std::int64_t kWarnAlreadyOff = 1;
constexpr std::int64_t kWarnAlreadyOn = 2;
constexpr std::int64_t kWarnInjectWhileOff = 3;
constexpr std::int64_t kWarnUndecodable = 4;

NodeId id_of(std::size_t idx) { return NodeId{static_cast<std::uint8_t>(idx + 1)}; }

void require_valid(const Scenario& s) {
  if (auto errors = s.validate(); !errors.empty()) throw ScenarioError(std::move(errors));
}

}  // namespace

LinkTable realize_links(const Scenario& scenario, std::uint64_t seed) {
  auto placement = make_engine(seed, kPlacementStream);
  std::vector<Point> coords = place_nodes(scenario.references, placement);
  const auto sensing = place_nodes(scenario.sensing, placement);
  coords.insert(coords.end(), sensing.begin(), sensing.end());
  std::vector<double> attenuation(coords.size(), 0.0);
  for (const auto& o : scenario.overrides) {
    if (o.node.valid() && o.node.value <= coords.size()) {
      attenuation[o.node.value - 1u] = o.tx_attenuation_db;
    }
  }
  auto link_rng = make_engine(seed, kLinkStream);
  return LinkTable::realize(coords, scenario.channel, link_rng, std::move(attenuation));
}

bool Simulator::Later::operator()(const Event& a, const Event& b) const {
  if (a.time != b.time) return a.time > b.time;
  if (a.rank != b.rank) return a.rank > b.rank;
  if (a.node != b.node) return a.node > b.node;
  return a.order > b.order;
}

Simulator::Simulator(const Scenario& scenario, std::uint64_t seed, LogDetail detail)
    : Simulator(scenario, (require_valid(scenario), realize_links(scenario, seed)), seed, detail) {}

Simulator::Simulator(const Scenario& scenario, LinkTable links, std::uint64_t seed,
                     LogDetail detail)
    : scenario_(scenario),
      seed_(seed),
      links_(std::move(links)),
      log_(detail),
      boot_rng_(make_engine(seed, kBootStream)),
      fading_rng_(make_engine(seed, kFadingStream)) {
  require_valid(scenario_);
  if (links_.size() != scenario_.node_total()) {
    throw std::invalid_argument("link table size does not match the scenario's node count");
  }
  init();
}

void Simulator::init() {
  nodes_.resize(scenario_.node_total());
  std::uniform_int_distribution<int> slot_dist(1, scenario_.timing.n_slot);
  std::uniform_int_distribution<std::int64_t> wake_dist(0, scenario_.wake_window.count());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    // Draw for every node so overrides do not shift other nodes' draws.
    Duration offset{wake_dist(boot_rng_)};
    int slot = slot_dist(boot_rng_);
    if (const auto* o = scenario_.override_for(id_of(i))) {
      if (o->wake_offset) offset = *o->wake_offset;
      if (o->initial_slot) slot = *o->initial_slot;
    }
    nodes_[i].pending_slot = slot;
    schedule_boot(i, offset);
  }
  for (std::size_t e = 0; e < scenario_.events.size(); ++e) {
    push(scenario_.events[e].time, EventType::kScenario, scenario_.events[e].node.value - 1u, e);
  }
}

void Simulator::schedule(const ScenarioEvent& ev) {
  if (ev.time < now_) throw std::invalid_argument("cannot schedule an event in the past");
  if (!ev.node.valid() || ev.node.value > nodes_.size()) {
    throw std::invalid_argument("event targets an unknown node");
  }
  extra_events_.push_back(ev);
  push(ev.time, EventType::kScenario, ev.node.value - 1u,
       scenario_.events.size() + extra_events_.size() - 1);
}

void Simulator::push(Time t, EventType type, std::size_t node, std::uint64_t token) {
  std::uint8_t rank = 3;
  if (type == EventType::kTxEnd) rank = 0;
  if (type == EventType::kTimer) rank = 2;
  queue_.push(Event{t, rank, static_cast<std::uint8_t>(node), order_++, type, token});
}

void Simulator::schedule_boot(std::size_t idx, Duration offset) {
  push(now_ + offset, EventType::kBoot, idx, nodes_[idx].epoch);
}

void Simulator::run() { run_until(scenario_.horizon); }

void Simulator::run_until(Time t) {
  t = std::min(t, scenario_.horizon);
  while (!queue_.empty() && queue_.top().time <= t) {
    const Event ev = queue_.top();
    queue_.pop();
    now_ = ev.time;
    dispatch(ev);
  }
  now_ = std::max(now_, t);
}

void Simulator::dispatch(const Event& ev) {
  switch (ev.type) {
    case EventType::kTxEnd: tx_end(ev.token); break;
    case EventType::kTimer: timer(ev.node, ev.token); break;
    case EventType::kBoot:
      if (nodes_[ev.node].powered && nodes_[ev.node].epoch == ev.token) boot(ev.node);
      break;
    case EventType::kScenario: apply(ev.token); break;
  }
}

const NodeMachine* Simulator::node(NodeId id) const {
  if (!id.valid() || id.value > nodes_.size()) return nullptr;
  const auto& rt = nodes_[id.value - 1u];
  return rt.machine ? &*rt.machine : nullptr;
}

std::vector<bool> Simulator::up_mask() const {
  std::vector<bool> up(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) up[i] = nodes_[i].machine.has_value();
  return up;
}

std::vector<NodeView> Simulator::node_views() const {
  std::vector<NodeView> views(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& rt = nodes_[i];
    auto& v = views[i];
    v.is_reference = scenario_.is_reference(id_of(i));
    if (!rt.machine) continue;
    const NodeMachine& m = *rt.machine;
    v.up = true;
    v.slot = m.slot();
    v.hop = m.hop();
    v.slot_exhaustions = m.stats().slot_exhaustions;
    v.slot_forced = rt.slot_forced;
    for (NodeId n : m.heard_ids()) v.heard.push_back(n.value - 1u);
    for (NodeId n : m.bidirectional_ids()) v.bidirectional.push_back(n.value - 1u);
  }
  return views;
}

void Simulator::boot(std::size_t idx) {
  auto& rt = nodes_[idx];
  const NodeId id = id_of(idx);
  SeededRandom stream(seed_, kNodeStreamBase + id.value, rt.boots);
  std::unique_ptr<RandomSource> rng;
  const auto* o = scenario_.override_for(id);
  if (rt.boots == 0 && o && (!o->grant_script.empty() || !o->pick_script.empty())) {
    std::deque<double> grants;
    for (bool g : o->grant_script) grants.push_back(g ? 0.0 : 2.0);
    std::deque<std::size_t> picks(o->pick_script.begin(), o->pick_script.end());
    rng = std::make_unique<ScriptedRandom>(std::move(grants), std::move(picks), std::move(stream));
  } else {
    rng = std::make_unique<SeededRandom>(std::move(stream));
  }
  ++rt.boots;
  rt.slot_forced = false;
  rt.machine.emplace(scenario_.timing, id, scenario_.is_reference(id), rt.pending_slot,
                     std::move(rng), scenario_.forwarding_policy);
  rt.role = Role::P;
  rt.listening_since = Time::max();
  log_.add({now_, LogKind::kBoot, id,
            {{"slot", rt.pending_slot},
             {"hop", rt.machine->hop()},
             {"ref", scenario_.is_reference(id) ? 1 : 0}}});
  const Snapshot before = snapshot(idx);
  execute(idx, rt.machine->boot(now_), before, false);
}

void Simulator::timer(std::size_t idx, std::uint64_t token) {
  auto& rt = nodes_[idx];
  if (!rt.machine || token != rt.timer_gen) return;
  const Snapshot before = snapshot(idx);
  execute(idx, rt.machine->on_timer_expired(now_), before, false);
}

Simulator::Snapshot Simulator::snapshot(std::size_t idx) const {
  const auto& m = *nodes_[idx].machine;
  Snapshot s{m.slot(), m.hop(), m.stats(), {}};
  if (log_.wants(LogKind::kNeighborAdd)) {
    s.neighbors.reserve(m.neighbors().size());
    for (const auto& [nid, e] : m.neighbors()) s.neighbors.emplace_back(nid, e.bidirectional);
  }
  return s;
}

void Simulator::execute(std::size_t idx, std::vector<Action> actions, const Snapshot& before,
                        bool resync) {
  auto& rt = nodes_[idx];
  const NodeId id = id_of(idx);
  for (auto& a : actions) {
    if (auto* r = std::get_if<action::EnterRole>(&a)) {
      const bool was_listening = is_listening(rt.role);
      rt.role = r->role;
      if (!is_listening(r->role)) {
        rt.listening_since = Time::max();
      } else if (!was_listening) {
        rt.listening_since = now_;
      }
      log_.add({now_, LogKind::kRole, id,
                {{"role", static_cast<std::int64_t>(r->role)},
                 {"slot", rt.machine->slot()},
                 {"hop", rt.machine->hop()}}});
    } else if (auto* t = std::get_if<action::SetTimer>(&a)) {
      ++rt.timer_gen;
      push(now_ + t->duration, EventType::kTimer, idx, rt.timer_gen);
      log_.add({now_, LogKind::kTimer, id,
                {{"timer_us", t->duration.count()}, {"resync", resync ? 1 : 0}}});
    } else if (auto* s = std::get_if<action::StartTransmit>(&a)) {
      start_transmission(idx, s->frame, s->airtime);
    } else if (auto* d = std::get_if<action::Deliver>(&a)) {
      const int hops = data_tx_[{d->origin, d->sequence}];
      deliveries_.push_back({now_, id, d->origin, d->sequence, d->from, hops});
      log_.add({now_, LogKind::kDeliver, id,
                {{"origin", d->origin.value},
                 {"seq", d->sequence},
                 {"from", d->from.value},
                 {"hops", hops}}});
    }
  }

  const NodeMachine& m = *rt.machine;
  if (m.slot() != before.slot) rt.slot_forced = false;
  if (m.stats().slot_exhaustions != before.stats.slot_exhaustions) {
    rt.slot_forced = true;
    log_.add({now_, LogKind::kSlotExhausted, id, {{"slot", m.slot()}}});
  }
  if (m.slot() != before.slot) {
    log_.add({now_, LogKind::kSlot, id, {{"old", before.slot}, {"new", m.slot()}}});
  }
  if (m.stats().forwarded != before.stats.forwarded && !m.queue().empty()) {
    const auto& msg = m.queue().back();
    log_.add({now_, LogKind::kEnqueue, id, {{"origin", msg.origin.value}, {"seq", msg.sequence}}});
  }
  if (m.stats().dropped_unroutable != before.stats.dropped_unroutable) {
    log_.add({now_, LogKind::kDrop, id,
              {{"count", static_cast<std::int64_t>(m.stats().dropped_unroutable -
                                                   before.stats.dropped_unroutable)}}});
  }
  if (log_.wants(LogKind::kNeighborAdd)) {
    const auto& now_nb = m.neighbors();
    for (const auto& [nid, bidir] : before.neighbors) {
      if (!now_nb.count(nid)) log_.add({now_, LogKind::kNeighborRemove, id, {{"peer", nid.value}}});
    }
    for (const auto& [nid, e] : now_nb) {
      auto it = std::find_if(before.neighbors.begin(), before.neighbors.end(),
                             [&](const auto& p) { return p.first == nid; });
      const bool existed = it != before.neighbors.end();
      if (!existed) log_.add({now_, LogKind::kNeighborAdd, id, {{"peer", nid.value}}});
      if (e.bidirectional && (!existed || !it->second)) {
        log_.add({now_, LogKind::kBidirAdd, id, {{"peer", nid.value}}});
      }
    }
  }
  if (m.hop() != before.hop) {
    log_.add({now_, LogKind::kHop, id, {{"old", before.hop}, {"new", m.hop()}}});
  }
}

void Simulator::start_transmission(std::size_t idx, const Frame& frame, Duration airtime) {
  auto& rt = nodes_[idx];
  Transmission tx;
  tx.id = next_tx_id_++;
  tx.node = idx;
  tx.start = now_;
  tx.end = now_ + airtime;
  tx.bytes = codec::encode(frame);
  const std::size_t n = nodes_.size();
  tx.reach.assign(n, 0);
  tx.snr_db.assign(n, 0.0);
  std::exponential_distribution<double> fade(1.0);
  for (std::size_t rx = 0; rx < n; ++rx) {
    if (rx == idx) continue;
    double snr;
    if (links_.params().fading_mode == FadingMode::kPerPacket) {
      snr = links_.snr_db(idx, rx, fade(fading_rng_));
      tx.reach[rx] = snr > links_.params().gamma_min_db ? 1 : 0;
    } else {
      snr = links_.snr_db(idx, rx);
      tx.reach[rx] = links_.accessible(idx, rx) ? 1 : 0;
    }
    tx.snr_db[rx] = snr;
  }
  ++tx_count_;
  rt.active_tx = tx.id;

  const auto* d = std::get_if<DataFrame>(&frame);
  const BeaconFrame& b = sync_fields(frame);
  if (d) ++data_tx_[{d->origin, d->sequence}];
  log_.add({now_, LogKind::kTxStart, id_of(idx),
            {{"tx", static_cast<std::int64_t>(tx.id)},
             {"type", d ? 2 : 1},
             {"slot", b.sender_slot},
             {"hop", b.sender_hop},
             {"airtime_us", airtime.count()},
             {"next_hop", d ? d->next_hop.value : 0},
             {"origin", d ? d->origin.value : 0},
             {"seq", d ? d->sequence : 0}}});
  push(tx.end, EventType::kTxEnd, idx, tx.id);
  txs_.push_back(std::move(tx));
}

Simulator::Transmission* Simulator::find_tx(std::uint64_t id) {
  if (txs_.empty() || id < txs_.front().id) return nullptr;
  const std::uint64_t offset = id - txs_.front().id;
  return offset < txs_.size() ? &txs_[offset] : nullptr;
}

void Simulator::tx_end(std::uint64_t tx_id) {
  Transmission* tx = find_tx(tx_id);
  if (!tx || tx->aborted) return;
  auto& sender = nodes_[tx->node];
  if (sender.active_tx == tx->id) sender.active_tx.reset();
  log_.add({now_, LogKind::kTxEnd, id_of(tx->node),
            {{"tx", static_cast<std::int64_t>(tx->id)}, {"aborted", 0}}});

  const Time start = tx->start;
  const Time end = tx->end;
  const std::vector<std::uint8_t> bytes = tx->bytes;
  const std::vector<std::uint8_t> reach = tx->reach;
  const std::vector<double> snr = tx->snr_db;
  const std::size_t sender_idx = tx->node;
  const std::uint64_t id = tx->id;

  std::optional<Frame> frame;
  for (std::size_t rx = 0; rx < nodes_.size(); ++rx) {
    if (rx == sender_idx || !reach[rx]) continue;
    auto& rt = nodes_[rx];
    if (!rt.machine || !is_listening(rt.role) || rt.listening_since > start) continue;
    const bool collided = std::any_of(txs_.begin(), txs_.end(), [&](const Transmission& y) {
      return y.id != id && y.reach[rx] && y.start < end && y.end > start;
    });
    if (collided) continue;
    if (!frame) {
      auto decoded = codec::decode(bytes);
      if (std::holds_alternative<codec::DecodeError>(decoded)) {
        log_.add({now_, LogKind::kWarning, id_of(sender_idx),
                  {{"reason", kWarnUndecodable}, {"tx", static_cast<std::int64_t>(id)}}});
        break;
      }
      frame = std::get<Frame>(std::move(decoded));
    }
    ++rx_count_;
    const BeaconFrame& b = sync_fields(*frame);
    log_.add({now_, LogKind::kRx, id_of(rx),
              {{"tx", static_cast<std::int64_t>(id)},
               {"from", b.sender.value},
               {"type", std::holds_alternative<DataFrame>(*frame) ? 2 : 1},
               {"snr_cdb", std::llround(snr[rx] * 100.0)}}});
    const Snapshot before = snapshot(rx);
    execute(rx, rt.machine->on_frame_received(*frame, now_, snr[rx]), before, true);
  }

  // Anything that could still overlap a future frame ends after now - airtime.
  const Duration keep = scenario_.timing.t_beacon * 2;
  while (!txs_.empty() && txs_.front().end + keep < now_) txs_.pop_front();
}

void Simulator::apply(std::size_t index) {
  const ScenarioEvent& ev = index < scenario_.events.size()
                                ? scenario_.events[index]
                                : extra_events_[index - scenario_.events.size()];
  apply_event(ev);
}

void Simulator::apply_event(const ScenarioEvent& ev) {
  const std::size_t idx = ev.node.value - 1u;
  auto& rt = nodes_[idx];
  switch (ev.kind) {
    case ScenarioEventKind::kOff:
      if (!rt.powered) {
        log_.add({now_, LogKind::kWarning, ev.node, {{"reason", kWarnAlreadyOff}}});
        return;
      }
      power_off(idx);
      return;
    case ScenarioEventKind::kOn:
      if (rt.powered) {
        log_.add({now_, LogKind::kWarning, ev.node, {{"reason", kWarnAlreadyOn}}});
        return;
      }
      power_on(idx);
      return;
    case ScenarioEventKind::kInject: {
      if (!rt.machine) {
        log_.add({now_, LogKind::kWarning, ev.node, {{"reason", kWarnInjectWhileOff}}});
        return;
      }
      const Snapshot before = snapshot(idx);
      auto actions = rt.machine->inject({ev.payload.begin(), ev.payload.end()});
      std::int64_t seq = 0;
      if (!actions.empty()) {
        seq = std::get<action::Deliver>(actions.front()).sequence;
      } else if (!rt.machine->queue().empty()) {
        seq = rt.machine->queue().back().sequence;
      }
      log_.add({now_, LogKind::kInject, ev.node,
                {{"seq", seq}, {"payload_len", static_cast<std::int64_t>(ev.payload.size())}}});
      execute(idx, std::move(actions), before, false);
      return;
    }
  }
}

void Simulator::power_off(std::size_t idx) {
  auto& rt = nodes_[idx];
  if (rt.active_tx) {
    if (Transmission* tx = find_tx(*rt.active_tx); tx && !tx->aborted) {
      // The carrier stops now; what was on air still interferes.
      tx->aborted = true;
      tx->end = now_;
      log_.add({now_, LogKind::kTxEnd, id_of(idx),
                {{"tx", static_cast<std::int64_t>(tx->id)}, {"aborted", 1}}});
    }
    rt.active_tx.reset();
  }
  rt.machine.reset();
  rt.powered = false;
  rt.role = Role::P;
  rt.listening_since = Time::max();
  ++rt.epoch;
  ++rt.timer_gen;
  log_.add({now_, LogKind::kNodeOff, id_of(idx), {}});
}

void Simulator::power_on(std::size_t idx) {
  auto& rt = nodes_[idx];
  rt.powered = true;
  ++rt.epoch;
  std::uniform_int_distribution<int> slot_dist(1, scenario_.timing.n_slot);
  std::uniform_int_distribution<std::int64_t> wake_dist(0, scenario_.wake_window.count());
  const Duration offset{wake_dist(boot_rng_)};
  rt.pending_slot = slot_dist(boot_rng_);
  log_.add({now_, LogKind::kNodeOn, id_of(idx), {{"offset_us", offset.count()}}});
  schedule_boot(idx, offset);
}

RunOutput run(const Scenario& scenario, std::uint64_t seed, LogDetail detail) {
  Simulator sim(scenario, seed, detail);
  sim.run();
  return RunOutput{sim.log(), sim.links(), sim.deliveries()};
}

}  // namespace parmesh
