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


#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "parmesh/protocol.hpp"
#include "resync_grid.hpp"

using namespace parmesh;
using test::beacon;
using test::kDeny;
using test::kGrant;
using test::nid;
using test::scripted;

namespace {

// Records the range of every index() call.
class RecordingRandom final : public RandomSource {
 public:
  explicit RecordingRandom(double u, std::vector<std::size_t>* ranges, std::size_t pick = 0)
      : u_(u), ranges_(ranges), pick_(pick) {}
  double uniform() override { return u_; }
  std::size_t index(std::size_t n) override {
    ranges_->push_back(n);
    return pick_ < n ? pick_ : 0;
  }

 private:
  double u_;
  std::vector<std::size_t>* ranges_;
  std::size_t pick_;
};

struct Step {
  std::optional<Role> role;
  std::optional<Duration> timer;
  bool transmits{false};
  std::optional<Frame> frame;
};

Step summarize(const std::vector<Action>& actions) {
  Step s;
  for (const auto& a : actions) {
    if (auto* r = std::get_if<action::EnterRole>(&a)) s.role = r->role;
    if (auto* t = std::get_if<action::SetTimer>(&a)) s.timer = t->duration;
    if (auto* x = std::get_if<action::StartTransmit>(&a)) {
      s.transmits = true;
      s.frame = x->frame;
    }
  }
  return s;
}

/// Boots at `t0` and advances into R1 for a whole period without a turn.
NodeMachine listening(const TimingConfig& c, int id, int slot, bool reference = false,
                      Time t0 = Time{0}, std::deque<std::size_t> picks = {}) {
  NodeMachine m(c, nid(id), reference, slot, scripted({kDeny, kDeny, kDeny}, std::move(picks)));
  m.boot(t0);
  m.on_timer_expired(m.timer_deadline());
  REQUIRE(m.role() == Role::R1);
  return m;
}

/// Gives `m` a neighbor with the given hop that lists m, so it is bidirectional.
void hear(NodeMachine& m, int id, int slot, int hop, Time at, bool lists_me = true) {
  BeaconFrame b = beacon(id, slot, hop);
  if (lists_me) b.neighbors.push_back({m.id(), static_cast<std::uint8_t>(m.slot())});
  m.on_frame_received(b, at);
}

}  // namespace

TEST_SUITE("construction") {
  TEST_CASE("reference nodes start at hop 0, sensing nodes at the unknown hop") {
    TimingConfig c;
    NodeMachine ref(c, nid(1), true, 3, test::seeded());
    NodeMachine sen(c, nid(2), false, 3, test::seeded());
    CHECK(ref.hop() == 0);
    CHECK(sen.hop() == 30);
    CHECK(c.h_na == 30);
  }

  TEST_CASE("a fresh node is in P on its drawn slot with empty tables") {
    NodeMachine m(test::timing(4), nid(5), false, 1, test::seeded());
    CHECK(m.slot() == 1);
    CHECK(m.role() == Role::P);
    CHECK(m.neighbors().empty());
    CHECK(m.queue().empty());
    const auto s = summarize(m.boot(Time{0}));
    CHECK(s.role == Role::P);
    CHECK(s.timer == from_ms(10));
  }

  TEST_CASE("invalid slots, ids, configs and missing randomness are rejected") {
    const auto c = test::timing(4);
    CHECK_THROWS_AS(NodeMachine(c, nid(1), false, 0, test::seeded()), std::invalid_argument);
    CHECK_THROWS_AS(NodeMachine(c, nid(1), false, 5, test::seeded()), std::invalid_argument);
    CHECK_THROWS_AS(NodeMachine(c, nid(0), false, 1, test::seeded()), std::invalid_argument);
    CHECK_THROWS_AS(NodeMachine(c, nid(1), false, 1, nullptr), std::invalid_argument);
    auto bad = c;
    bad.t_beacon = from_ms(11);
    CHECK_THROWS_AS(NodeMachine(bad, nid(1), false, 1, test::seeded()), std::invalid_argument);
    bad = c;
    bad.p_grant = 1.5;
    CHECK_FALSE(bad.validate().empty());
    bad = c;
    bad.n_slot = 0;
    CHECK_FALSE(bad.validate().empty());
    CHECK(c.validate().empty());
  }

  TEST_CASE("derived durations") {
    TimingConfig c;
    CHECK(c.t_r() == from_ms(5));
    CHECK(c.t_comm() == from_ms(120));
    CHECK(c.period() == from_ms(130));
    CHECK(c.neighbor_timeout() == from_ms(1300));
  }
}

TEST_SUITE("role cycle") {
  TEST_CASE("granted node on slot 2 waits one slot, transmits, then responds to the end") {
    NodeMachine m(test::timing(4), nid(1), false, 2, scripted({kGrant}));
    m.boot(Time{0});
    auto s = summarize(m.on_timer_expired(from_ms(10)));
    CHECK(s.role == Role::R1);
    CHECK(s.timer == from_ms(10));
    s = summarize(m.on_timer_expired(from_ms(20)));
    CHECK(s.role == Role::I);
    CHECK(s.transmits);
    CHECK(s.timer == from_ms(5));
    s = summarize(m.on_timer_expired(from_ms(25)));
    CHECK(s.role == Role::R2);
    CHECK(s.timer == from_ms(25));
    s = summarize(m.on_timer_expired(from_ms(50)));
    CHECK(s.role == Role::P);
  }

  TEST_CASE("slot 1 goes straight from P to the initiator turn") {
    NodeMachine m(test::timing(4), nid(1), false, 1, scripted({kGrant}));
    m.boot(Time{0});
    const auto acts = m.on_timer_expired(from_ms(10));
    std::vector<Role> roles;
    for (const auto& a : acts) {
      if (auto* r = std::get_if<action::EnterRole>(&a)) roles.push_back(r->role);
    }
    CHECK(roles == std::vector<Role>{Role::R1, Role::I});
    CHECK(m.role() == Role::I);
    CHECK(m.timer_deadline() == from_ms(15));
  }

  TEST_CASE("a node without the grant listens for the whole period, then processes") {
    NodeMachine m(test::timing(4), nid(1), false, 3, scripted({kDeny}));
    m.boot(Time{0});
    auto s = summarize(m.on_timer_expired(from_ms(10)));
    CHECK(s.role == Role::R1);
    CHECK(s.timer == from_ms(40));
    CHECK_FALSE(s.transmits);
    s = summarize(m.on_timer_expired(from_ms(50)));
    CHECK(s.role == Role::P);
  }

  TEST_CASE("every slot's granted period sums to t_proc + t_comm") {
    for (int n = 1; n <= 20; ++n) {
      for (int slot = 1; slot <= n; ++slot) {
        const auto c = test::timing(n);
        NodeMachine m(c, nid(1), false, slot, scripted({kGrant, kGrant}));
        m.boot(Time{0});
        while (true) {
          m.on_timer_expired(m.timer_deadline());
          if (m.role() == Role::P) break;
        }
        REQUIRE(m.timer_deadline() - c.t_proc == c.period());
      }
    }
  }

  TEST_CASE("observed roles follow P R1 I R2 or P R1, timers never negative") {
    const auto c = test::timing(6);
    NodeMachine m(c, nid(3), false, 4, test::seeded(31));
    std::vector<Role> seq;
    auto track = [&](const std::vector<Action>& acts) {
      for (const auto& a : acts) {
        if (auto* r = std::get_if<action::EnterRole>(&a)) seq.push_back(r->role);
        if (auto* t = std::get_if<action::SetTimer>(&a)) REQUIRE(t->duration.count() >= 0);
      }
    };
    track(m.boot(Time{0}));
    int granted = 0;
    for (int i = 0; i < 2000; ++i) track(m.on_timer_expired(m.timer_deadline()));
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const Role a = seq[i];
      const Role b = seq[i + 1];
      const bool ok = (a == Role::P && b == Role::R1) || (a == Role::R1 && b == Role::I) ||
                      (a == Role::R1 && b == Role::P) || (a == Role::I && b == Role::R2) ||
                      (a == Role::R2 && b == Role::P);
      REQUIRE(ok);
      if (a == Role::R1 && b == Role::I) ++granted;
    }
    // Grants are drawn with p = 0.5.
    CHECK(granted > 300);
    CHECK(granted < 700);
  }

  TEST_CASE("firing a timer early is a host error") {
    NodeMachine m(test::timing(4), nid(1), false, 1, test::seeded());
    m.boot(Time{0});
    CHECK_THROWS_AS(m.on_timer_expired(from_ms(9)), std::logic_error);
  }
}

TEST_SUITE("listen and adjust") {
  TEST_CASE("first beacon heard on a shared slot: heard only, redraw among three slots") {
    std::vector<std::size_t> ranges;
    NodeMachine m(test::timing(4), nid(2), false, 1,
                  std::make_unique<RecordingRandom>(kDeny, &ranges, 0));
    m.boot(Time{0});
    m.on_timer_expired(from_ms(10));
    m.on_frame_received(beacon(1, 1, 30), from_ms(15));
    CHECK(m.heard_ids() == std::vector<NodeId>{nid(1)});
    CHECK(m.bidirectional_ids().empty());
    REQUIRE(ranges == std::vector<std::size_t>{3});
    CHECK(m.slot() == 2);
  }

  TEST_CASE("being listed in the beacon makes the sender bidirectional") {
    auto m = listening(test::timing(4), 1, 1);
    m.on_frame_received(beacon(2, 2, 30, {{1, 1}}), from_ms(35));
    CHECK(m.heard_ids() == std::vector<NodeId>{nid(2)});
    CHECK(m.bidirectional_ids() == std::vector<NodeId>{nid(2)});
  }

  TEST_CASE("not being listed leaves the bidirectional set unchanged") {
    auto m = listening(test::timing(4), 1, 1);
    m.on_frame_received(beacon(2, 2, 30, {{3, 3}}), from_ms(35));
    CHECK(m.heard_ids() == std::vector<NodeId>{nid(2)});
    CHECK(m.bidirectional_ids().empty());
    // A later beacon that omits us does not retract an established link.
    m.on_frame_received(beacon(2, 2, 30, {{1, 1}}), from_ms(40));
    m.on_frame_received(beacon(2, 2, 30), from_ms(45));
    CHECK(m.bidirectional_ids() == std::vector<NodeId>{nid(2)});
  }

  TEST_CASE("entries record slot, hop, time and signal level of the latest frame") {
    auto m = listening(test::timing(4), 1, 1);
    m.on_frame_received(beacon(2, 3, 7), from_ms(35), 4.5);
    m.on_frame_received(beacon(2, 4, 6), from_ms(40), -1.0);
    const auto& e = m.neighbors().at(nid(2));
    CHECK(e.slot == 4);
    CHECK(e.hop == 6);
    CHECK(e.last_heard == from_ms(40));
    CHECK(e.rssi_db == -1.0);
  }

  TEST_CASE("frames are ignored outside the listening roles") {
    NodeMachine m(test::timing(4), nid(1), false, 1, scripted({kGrant}));
    m.boot(Time{0});
    CHECK(m.on_frame_received(beacon(2, 1, 0), from_ms(5)).empty());
    m.on_timer_expired(from_ms(10));
    REQUIRE(m.role() == Role::I);
    CHECK(m.on_frame_received(beacon(2, 1, 0), from_ms(12)).empty());
    CHECK(m.neighbors().empty());
  }

  TEST_CASE("protocol-invalid frames leave every table untouched") {
    auto m = listening(test::timing(4), 1, 2);
    const Time deadline = m.timer_deadline();
    for (const auto& bad : {beacon(1, 1, 3), beacon(2, 0, 3), beacon(2, 5, 3), beacon(2, 1, 31),
                            beacon(2, 1, 3, {{3, 9}}), beacon(2, 1, 3, {{2, 1}}),
                            beacon(0, 1, 3)}) {
      CHECK(m.on_frame_received(bad, from_ms(20)).empty());
    }
    CHECK(m.neighbors().empty());
    CHECK(m.slot() == 2);
    CHECK(m.timer_deadline() == deadline);
    CHECK(m.stats().malformed == 7);
  }
}

TEST_SUITE("slot adjustment") {
  TEST_CASE("conflict with an empty table draws from every other slot") {
    std::vector<std::size_t> ranges;
    NodeMachine m(test::timing(4), nid(9), false, 1,
                  std::make_unique<RecordingRandom>(kDeny, &ranges, 2));
    CHECK(m.adjust_slot(beacon(1, 1, 30)) == 4);
    CHECK(ranges == std::vector<std::size_t>{3});
  }

  TEST_CASE("no conflict keeps the slot") {
    NodeMachine m(test::timing(4), nid(9), false, 3, test::seeded());
    CHECK(m.adjust_slot(beacon(1, 1, 30, {{2, 2}})) == 3);
  }

  TEST_CASE("an exhausted exclusion set keeps the slot and counts it") {
    NodeMachine m(test::timing(2), nid(9), false, 1, test::seeded());
    CHECK(m.adjust_slot(beacon(1, 1, 30, {{2, 2}})) == 1);
    CHECK(m.stats().slot_exhaustions == 1);
  }

  TEST_CASE("the receiver's own entry in the list is not a conflict") {
    NodeMachine m(test::timing(4), nid(9), false, 3, test::seeded());
    CHECK(m.adjust_slot(beacon(1, 1, 30, {{9, 3}})) == 3);
  }

  TEST_CASE("slots of already heard neighbors are avoided too") {
    auto m = listening(test::timing(4), 9, 1, false, Time{0}, {0});
    m.on_frame_received(beacon(5, 2, 30), from_ms(12));
    REQUIRE(m.slot() == 1);
    // Conflict on slot 1; slot 2 is known from node 5, slot 3 is reported.
    m.on_frame_received(beacon(6, 1, 30, {{7, 3}}), from_ms(22));
    CHECK(m.slot() == 4);
  }

  TEST_CASE("redrawn slots avoid every excluded slot unless none is free") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 3000; ++trial) {
      const int n = std::uniform_int_distribution<int>(1, 12)(rng);
      auto m = listening(test::timing(n), 200, std::uniform_int_distribution<int>(1, n)(rng));
      std::set<int> known;
      for (int k = 0; k < 3; ++k) {
        const int id = 1 + k;
        const int s = std::uniform_int_distribution<int>(1, n)(rng);
        m.on_frame_received(beacon(id, s, 30), from_ms(11 + k));
      }
      for (const auto& [id, e] : m.neighbors()) known.insert(e.slot);
      BeaconFrame b = beacon(100, std::uniform_int_distribution<int>(1, n)(rng), 30);
      std::set<int> reported{b.sender_slot};
      for (int k = 0; k < 3; ++k) {
        const auto slot = static_cast<std::uint8_t>(std::uniform_int_distribution<int>(1, n)(rng));
        b.neighbors.push_back({nid(50 + k), slot});
        reported.insert(slot);
      }
      const int before = m.slot();
      const std::uint64_t exhaustions = m.stats().slot_exhaustions;
      const int after = m.adjust_slot(b);
      std::set<int> excluded = known;
      excluded.insert(reported.begin(), reported.end());
      if (!reported.count(before)) {
        REQUIRE(after == before);
      } else if (static_cast<int>(excluded.size()) == n) {
        REQUIRE(after == before);
        REQUIRE(m.stats().slot_exhaustions == exhaustions + 1);
      } else {
        REQUIRE_FALSE(excluded.count(after));
        REQUIRE(after >= 1);
        REQUIRE(after <= n);
      }
    }
  }
}

TEST_SUITE("resync") {
  TEST_CASE("walkthrough values") {
    const auto c = test::timing(4);
    // Responder after its turn, sender on slot 1: 3 slots plus t_r.
    {
      NodeMachine m(c, nid(2), false, 2, scripted({kGrant}));
      m.boot(Time{0});
      for (int i = 0; i < 3; ++i) m.on_timer_expired(m.timer_deadline());
      REQUIRE(m.role() == Role::R2);
      CHECK(m.resync_duration(1) == 3 * c.t_slot + c.t_r());
      CHECK(m.resync_duration(2) == 2 * c.t_slot + c.t_r());
    }
    // Awaiting slot 2 after hearing slot 1: t_r.
    {
      NodeMachine m(c, nid(2), false, 2, scripted({kGrant}));
      m.boot(Time{0});
      m.on_timer_expired(m.timer_deadline());
      REQUIRE(m.role() == Role::R1);
      REQUIRE(m.initiator_pending());
      CHECK(m.resync_duration(1) == c.t_r());
    }
    // Awaiting slot 1 of the next period after hearing slot 3.
    {
      NodeMachine m(c, nid(2), false, 3, scripted({kGrant}, {0}));
      m.boot(Time{0});
      m.on_timer_expired(m.timer_deadline());
      REQUIRE(m.initiator_pending());
      m.adjust_slot(beacon(7, 2, 30, {{8, 3}}));
      REQUIRE(m.slot() == 1);
      CHECK(m.resync_duration(3) == c.t_slot + c.t_proc + c.t_r());
    }
  }

  TEST_CASE("exhaustive grid aligns every receiver with the sender's timeline") {
    const auto outcome = test::resync_grid(20);
    INFO(outcome.detail);
    CHECK(outcome.ok);
    CHECK(outcome.cases > 7000);
  }

  TEST_CASE("a pending turn on the sender's slot is forfeited") {
    const auto c = test::timing(3);
    NodeMachine m(c, nid(9), false, 2, scripted({kGrant}));
    m.boot(Time{0});
    m.on_timer_expired(m.timer_deadline());
    REQUIRE(m.initiator_pending());
    m.on_frame_received(beacon(1, 2, 30, {{3, 1}, {4, 3}}), from_ms(12));
    CHECK(m.slot() == 2);
    CHECK_FALSE(m.initiator_pending());
    CHECK(m.stats().forfeited_turns == 1);
    CHECK(m.timer_remaining(from_ms(12)) == c.t_slot + c.t_r());
    m.on_timer_expired(m.timer_deadline());
    CHECK(m.role() == Role::P);
  }

  TEST_CASE("two synchronized receivers keep coincident P entries") {
    const auto c = test::timing(5);
    NodeMachine a(c, nid(2), false, 4, scripted({kGrant, kGrant}));
    NodeMachine b(c, nid(3), false, 2, scripted({kGrant, kGrant}));
    a.boot(Time{0});
    b.boot(Time{0});
    a.on_timer_expired(from_ms(10));
    b.on_timer_expired(from_ms(10));
    // Sender on slot 1 finishes its beacon at 15 ms.
    a.on_frame_received(beacon(1, 1, 30), from_ms(15));
    b.on_frame_received(beacon(1, 1, 30), from_ms(15));
    auto run_to_p = [](NodeMachine& m) {
      do {
        m.on_timer_expired(m.timer_deadline());
      } while (m.role() != Role::P);
      return m.timer_deadline() - m.config().t_proc;
    };
    CHECK(run_to_p(a) == run_to_p(b));
  }
}

TEST_SUITE("neighbor pruning") {
  TEST_CASE("a neighbor silent for more than n_max periods is removed") {
    TimingConfig c;  // 12 slots: timeout 10 * (10 + 120) ms = 1.3 s
    auto m = listening(c, 7, 5, false, from_s(10) - c.t_proc);
    hear(m, 1, 2, 0, from_s(10));
    REQUIRE(m.hop() == 1);
    CHECK(m.prune_neighbors(from_s(11.3)).empty());
    const auto removed = m.prune_neighbors(from_s(11.4));
    CHECK(removed == std::vector<NodeId>{nid(1)});
    CHECK(m.neighbors().empty());
    CHECK(m.recompute_hop() == 30);
  }

  TEST_CASE("P entry prunes and recomputes the hop") {
    TimingConfig c;
    auto m = listening(c, 7, 5, false, from_s(10) - c.t_proc);
    hear(m, 1, 2, 0, from_s(10));
    REQUIRE(m.hop() == 1);
    // The R1 timer expired long ago; the host fires it late.
    m.on_timer_expired(from_s(11.4));
    CHECK(m.role() == Role::P);
    CHECK(m.neighbors().empty());
    CHECK(m.hop() == 30);
  }

  TEST_CASE("fresh entries and empty tables are untouched") {
    TimingConfig c;
    auto m = listening(c, 7, 5);
    CHECK(m.prune_neighbors(from_s(50)).empty());
    hear(m, 1, 2, 0, c.t_proc + from_ms(1));
    CHECK(m.prune_neighbors(c.t_proc + from_ms(1)).empty());
    CHECK(m.neighbors().size() == 1);
  }
}

TEST_SUITE("hop numbers") {
  TEST_CASE("one more than the best bidirectional neighbor") {
    auto m = listening(TimingConfig{}, 12, 5);
    hear(m, 13, 1, 2, from_ms(11));
    hear(m, 16, 2, 2, from_ms(12));
    hear(m, 17, 3, 3, from_ms(13));
    CHECK(m.recompute_hop() == 3);
    CHECK(m.hop() == 3);
  }

  TEST_CASE("neighbor at hop 1 gives hop 2") {
    auto m = listening(TimingConfig{}, 4, 5);
    hear(m, 5, 1, 1, from_ms(11));
    CHECK(m.hop() == 2);
  }

  TEST_CASE("unknown when no neighbor is eligible") {
    auto m = listening(TimingConfig{}, 4, 5);
    CHECK(m.recompute_hop() == 30);
    hear(m, 5, 1, 30, from_ms(11));
    hear(m, 6, 2, 29, from_ms(12));
    CHECK(m.hop() == 30);
    hear(m, 7, 3, 0, from_ms(13), false);  // one-way only
    CHECK(m.hop() == 30);
    hear(m, 8, 4, 28, from_ms(14));
    CHECK(m.hop() == 29);
  }

  TEST_CASE("references stay at 0 whatever they hear") {
    auto m = listening(TimingConfig{}, 1, 5, true);
    hear(m, 5, 1, 0, from_ms(11));
    hear(m, 6, 2, 3, from_ms(12));
    CHECK(m.recompute_hop() == 0);
    CHECK(m.hop() == 0);
  }

  TEST_CASE("hop equals direct recomputation after random traffic") {
    std::mt19937_64 rng(4);
    const TimingConfig c;
    auto m = listening(c, 200, 5);
    for (int i = 0; i < 2000; ++i) {
      const int id = std::uniform_int_distribution<int>(1, 20)(rng);
      const int hop = std::uniform_int_distribution<int>(0, 30)(rng);
      const bool lists = std::bernoulli_distribution(0.6)(rng);
      hear(m, id, std::uniform_int_distribution<int>(1, 12)(rng), hop,
           from_ms(11) + Duration{i}, lists);
      int best = c.h_na;
      for (const auto& [nid_, e] : m.neighbors()) {
        if (e.bidirectional && e.hop < c.h_na - 1) best = std::min(best, e.hop + 1);
        REQUIRE((!e.bidirectional || m.neighbors().count(e.id)));
      }
      REQUIRE(m.hop() == best);
      const auto heard = m.heard_ids();
      for (auto b : m.bidirectional_ids()) {
        REQUIRE(std::find(heard.begin(), heard.end(), b) != heard.end());
      }
    }
  }
}

TEST_SUITE("next hop") {
  TEST_CASE("smallest hop wins") {
    auto m = listening(TimingConfig{}, 4, 5);
    hear(m, 5, 1, 1, from_ms(11));
    hear(m, 3, 2, 2, from_ms(12));
    CHECK(m.select_next_hop() == nid(5));
  }

  TEST_CASE("a single reference neighbor is chosen") {
    auto m = listening(TimingConfig{}, 4, 5);
    hear(m, 1, 1, 0, from_ms(11));
    CHECK(m.select_next_hop() == nid(1));
  }

  TEST_CASE("unroutable without eligible bidirectional neighbors") {
    auto m = listening(TimingConfig{}, 4, 5);
    CHECK_FALSE(m.select_next_hop());
    hear(m, 1, 1, 0, from_ms(11), false);
    hear(m, 2, 2, 30, from_ms(12));
    CHECK_FALSE(m.select_next_hop());
  }

  TEST_CASE("ties split evenly") {
    auto m = listening(TimingConfig{}, 4, 5);
    hear(m, 5, 1, 1, from_ms(11));
    hear(m, 6, 2, 1, from_ms(12));
    REQUIRE(m.bidirectional_ids().size() == 2);
    std::map<NodeId, int> counts;
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++counts[*m.select_next_hop()];
    const double f = static_cast<double>(counts[nid(5)]) / n;
    CHECK(f == doctest::Approx(0.5).epsilon(0.1));  // 0.5 +- 0.05
    const double e = n / 2.0;
    const double chi2 = (counts[nid(5)] - e) * (counts[nid(5)] - e) / e +
                        (counts[nid(6)] - e) * (counts[nid(6)] - e) / e;
    CHECK(chi2 < 10.83);  // 1 degree of freedom, 0.999 quantile
  }

  TEST_CASE("choice depends only on the minimal-hop set") {
    auto pick_sequence = [](int other_hop) {
      NodeMachine m(TimingConfig{}, nid(4), false, 5, scripted({kDeny}, {}, 55));
      m.boot(Time{0});
      m.on_timer_expired(m.timer_deadline());
      hear(m, 5, 1, 1, from_ms(11));
      hear(m, 6, 2, 1, from_ms(12));
      hear(m, 7, 3, 1, from_ms(13));
      hear(m, 8, 4, other_hop, from_ms(14));
      std::vector<NodeId> seq;
      for (int i = 0; i < 200; ++i) seq.push_back(*m.select_next_hop());
      return seq;
    };
    const auto base = pick_sequence(2);
    CHECK(pick_sequence(7) == base);
    CHECK(pick_sequence(30) == base);
  }

  TEST_CASE("alternative policies") {
    auto make = [](ForwardingPolicy p) {
      NodeMachine m(TimingConfig{}, nid(4), false, 5, scripted({kDeny}), p);
      m.boot(Time{0});
      m.on_timer_expired(m.timer_deadline());
      BeaconFrame a = beacon(5, 1, 1, {{4, 5}});
      BeaconFrame b = beacon(6, 2, 1, {{4, 5}});
      m.on_frame_received(a, from_ms(11), -3.0);
      m.on_frame_received(b, from_ms(12), 2.0);
      return m;
    };
    auto rssi = make(ForwardingPolicy::kBestRssi);
    CHECK(rssi.select_next_hop() == nid(6));
    auto flood = make(ForwardingPolicy::kBroadcastMin);
    CHECK(flood.select_next_hop() == kBroadcast);
    CHECK(to_string(ForwardingPolicy::kBestRssi) == "best-rssi");
    CHECK(forwarding_policy_from_string("broadcast-min") == ForwardingPolicy::kBroadcastMin);
    CHECK_FALSE(forwarding_policy_from_string("nearest"));
  }
}

TEST_SUITE("frames and messages") {
  TEST_CASE("beacon lists every heard neighbor with its slot") {
    auto m = listening(test::timing(4), 1, 1);
    m.on_frame_received(beacon(2, 2, 30), from_ms(35));
    const Frame f = m.build_frame();
    REQUIRE(std::holds_alternative<BeaconFrame>(f));
    CHECK(std::get<BeaconFrame>(f) == beacon(1, 1, 30, {{2, 2}}));
  }

  TEST_CASE("empty tables give a beacon with sender fields only") {
    NodeMachine m(test::timing(4), nid(3), true, 2, test::seeded());
    CHECK(m.build_frame() == Frame{beacon(3, 2, 0)});
  }

  TEST_CASE("a queued message rides in a data frame toward the best neighbor") {
    auto m = listening(TimingConfig{}, 4, 5);
    hear(m, 5, 1, 1, from_ms(11));
    hear(m, 3, 2, 2, from_ms(12));
    CHECK(m.inject({'x'}).empty());
    REQUIRE(m.queue().size() == 1);
    const Frame f = m.build_frame();
    REQUIRE(std::holds_alternative<DataFrame>(f));
    const auto& d = std::get<DataFrame>(f);
    CHECK(d.next_hop == nid(5));
    CHECK(d.origin == nid(4));
    CHECK(d.payload == std::vector<std::uint8_t>{'x'});
    CHECK(d.beacon.neighbors.size() == 2);
    CHECK(m.queue().empty());
  }

  TEST_CASE("unroutable messages stay queued, are retried and eventually dropped") {
    auto m = listening(TimingConfig{}, 4, 5);
    m.inject({'x'});
    for (int i = 0; i < NodeMachine::kMaxRouteAttempts - 1; ++i) {
      REQUIRE(std::holds_alternative<BeaconFrame>(m.build_frame()));
      REQUIRE(m.queue().size() == 1);
    }
    CHECK(m.queue().front().attempts == NodeMachine::kMaxRouteAttempts - 1);
    m.build_frame();
    CHECK(m.queue().empty());
    CHECK(m.stats().dropped_unroutable == 1);
    CHECK(m.stats().unroutable_attempts == 100);
  }

  TEST_CASE("references deliver, sensing nodes forward, others ignore") {
    DataFrame d;
    d.beacon = beacon(5, 1, 1, {{1, 2}, {6, 3}});
    d.origin = nid(4);
    d.sequence = 9;
    d.next_hop = nid(1);
    d.payload = {'p'};

    auto ref = listening(TimingConfig{}, 1, 2, true);
    const auto acts = ref.on_frame_received(d, from_ms(11));
    const auto it = std::find_if(acts.begin(), acts.end(), [](const Action& a) {
      return std::holds_alternative<action::Deliver>(a);
    });
    REQUIRE(it != acts.end());
    const auto& del = std::get<action::Deliver>(*it);
    CHECK(del.origin == nid(4));
    CHECK(del.from == nid(5));
    CHECK(del.payload == std::vector<std::uint8_t>{'p'});
    CHECK(ref.reverse_next_hop(nid(4)) == nid(5));

    d.next_hop = nid(6);
    auto relay = listening(TimingConfig{}, 6, 3);
    relay.on_frame_received(d, from_ms(11));
    REQUIRE(relay.queue().size() == 1);
    CHECK(relay.queue().front().origin == nid(4));
    CHECK(relay.stats().forwarded == 1);

    auto other = listening(TimingConfig{}, 7, 4);
    other.on_frame_received(d, from_ms(11));
    CHECK(other.queue().empty());
    CHECK(other.neighbors().count(nid(5)) == 1);  // still used for sync
  }

  TEST_CASE("duplicates are dropped until they age out of the cache") {
    auto m = listening(TimingConfig{}, 6, 3);
    DataFrame d;
    d.beacon = beacon(5, 1, 2);
    d.next_hop = nid(6);
    d.origin = nid(9);
    d.sequence = 0;
    m.on_frame_received(d, from_ms(11));
    m.on_frame_received(d, from_ms(12));
    CHECK(m.queue().size() == 1);
    CHECK(m.stats().duplicates == 1);
    for (std::uint16_t s = 1; s <= NodeMachine::kRouteCacheSize; ++s) {
      d.sequence = s;
      m.on_frame_received(d, from_ms(13));
    }
    d.sequence = 0;
    m.on_frame_received(d, from_ms(14));
    CHECK(m.stats().duplicates == 1);
    CHECK(m.queue().size() == NodeMachine::kRouteCacheSize + 2);
  }

  TEST_CASE("broadcast next hop is taken by nodes one hop closer") {
    DataFrame d;
    d.beacon = beacon(5, 1, 3, {{6, 3}});
    d.next_hop = kBroadcast;
    d.origin = nid(9);
    auto closer = listening(TimingConfig{}, 6, 3);
    hear(closer, 1, 4, 1, from_ms(11));  // hop 2
    closer.on_frame_received(d, from_ms(12));
    CHECK(closer.queue().size() == 1);
    auto same = listening(TimingConfig{}, 7, 3);
    same.on_frame_received(d, from_ms(12));
    CHECK(same.queue().empty());
  }

  TEST_CASE("reverse routes: lookup, unknown origin, newest wins") {
    NodeMachine m(TimingConfig{}, nid(1), true, 1, test::seeded());
    DataFrame d;
    d.beacon = beacon(5, 1, 1);
    d.origin = nid(4);
    m.record_reverse_route(d);
    CHECK(m.reverse_next_hop(nid(4)) == nid(5));
    CHECK_FALSE(m.reverse_next_hop(nid(8)));
    d.beacon.sender = nid(3);
    m.record_reverse_route(d);
    CHECK(m.reverse_next_hop(nid(4)) == nid(3));
  }

  TEST_CASE("a reference delivers its own readings immediately") {
    NodeMachine m(TimingConfig{}, nid(1), true, 1, test::seeded());
    const auto acts = m.inject({'r'});
    REQUIRE(acts.size() == 1);
    CHECK(std::get<action::Deliver>(acts[0]).origin == nid(1));
    CHECK(m.queue().empty());
  }

  TEST_CASE("data frames also drive slot adjustment and resync") {
    auto m = listening(test::timing(4), 6, 1, false, Time{0}, {0});
    DataFrame d;
    d.beacon = beacon(5, 1, 2);
    d.next_hop = nid(9);
    d.origin = nid(5);
    m.on_frame_received(d, from_ms(15));
    CHECK(m.slot() == 2);
    CHECK(m.timer_remaining(from_ms(15)) == 3 * from_ms(10) + from_ms(5));
  }
}
