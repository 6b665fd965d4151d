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
 *   Evaluation quantities computed from event logs and the god-view link
 *   table. Nothing here reads protocol state directly; callers that hold a
 *   live simulator pass NodeView snapshots instead.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parmesh/channel.hpp"
#include "parmesh/event_log.hpp"
#include "parmesh/types.hpp"

namespace parmesh {

/// Number of nodes in `transmitting` that `n` can decode.
int conflict_count(const LinkTable& table, std::size_t n, const std::vector<bool>& transmitting);

/// Piecewise-constant victim count. points[i] = (t_i, v_i) holds on
/// [t_i, t_{i+1}); the last value holds up to the horizon.
class VictimTrace {
 public:
  VictimTrace() = default;
  /// Throws std::invalid_argument unless breakpoints strictly increase,
  /// start at 0 and lie before the horizon.
  VictimTrace(std::vector<std::pair<Time, int>> points, Time horizon);

  const std::vector<std::pair<Time, int>>& points() const { return points_; }
  Time horizon() const { return horizon_; }

  int value_at(Time t) const;
  /// Largest value taken anywhere in [a, b).
  int max_over(Time a, Time b) const;
  bool any_positive(Time a, Time b) const { return max_over(a, b) > 0; }

  friend bool operator==(const VictimTrace&, const VictimTrace&) = default;

 private:
  std::vector<std::pair<Time, int>> points_{{Time{0}, 0}};
  Time horizon_{0};
};

struct TxInterval {
  std::size_t node;  // index, id - 1
  Time start;
  Time end;
};

/// Every transmission in the log, truncated where a node was switched off
/// mid-frame.
std::vector<TxInterval> transmissions_from_log(const EventLog& log);

/// Victims counted over god-view hearers that are powered and awake.
VictimTrace victim_trace(const EventLog& log, const LinkTable& table, Time horizon);

struct CurvePoint {
  Time t;
  double probability;
  int realizations;
};

struct CollisionCurve {
  Duration window;
  std::vector<CurvePoint> points;
};

/// Window centers at 0, step, 2*step, ... up to the common horizon. Throws
/// std::invalid_argument on an empty input or nonpositive window/step.
CollisionCurve collision_curve(const std::vector<VictimTrace>& traces, Duration window,
                               Duration step);

/// Earliest t with the trace 0 on [t, horizon]; none when the final
/// segment has victims.
std::optional<Time> consensus_time(const VictimTrace& trace);
/// Earliest start of a victim-free stretch at least `clean` long.
std::optional<Time> consensus_time_windowed(const VictimTrace& trace, Duration clean);

/// Step function of one node's hop number; nullopt while off or asleep.
class HopTrace {
 public:
  void set(Time t, std::optional<int> hop);
  std::optional<int> at(Time t) const;
  const std::vector<std::pair<Time, std::optional<int>>>& points() const { return points_; }

 private:
  std::vector<std::pair<Time, std::optional<int>>> points_;
};

/// One trace per node index, built from boot, hop and node_off records.
std::vector<HopTrace> hop_traces(const EventLog& log, std::size_t node_count);

/// Shortest path in hops from any reference over the bidirectional
/// god-view graph restricted to active nodes. nullopt when unreachable.
std::vector<std::optional<int>> bfs_hops(const LinkTable& table,
                                         const std::vector<bool>& is_reference,
                                         const std::vector<bool>& active = {});

/// What the metrics need to know about a node at one instant.
struct NodeView {
  bool up{false};
  bool is_reference{false};
  int slot{0};
  int hop{0};
  std::vector<std::size_t> heard;          // indices
  std::vector<std::size_t> bidirectional;  // indices
  std::uint64_t slot_exhaustions{0};
  /// The last conflict found no free slot, so the current one was kept.
  bool slot_forced{false};
};

struct HopCheck {
  std::size_t node;
  int claimed;
  std::optional<int> bfs;
};

/// Pairs for every node that is up.
std::vector<HopCheck> hop_accuracy(const std::vector<NodeView>& nodes, const LinkTable& table);

/// |A ∩ B| / |A ∪ B|; two empty sets give 1.
double jaccard(std::vector<std::size_t> a, std::vector<std::size_t> b);

struct NeighborCheck {
  std::size_t node;
  double heard;
  double bidirectional;
};

std::vector<NeighborCheck> neighbor_accuracy(const std::vector<NodeView>& nodes,
                                             const LinkTable& table);

struct SlotClash {
  std::size_t a;
  std::size_t b;
  std::size_t hearer;
  /// One of the pair holds its slot only because none was free.
  bool excused;
};

/// Distinct up nodes on the same slot that share an up god-view hearer.
std::vector<SlotClash> hidden_node_clashes(const std::vector<NodeView>& nodes,
                                           const LinkTable& table);

// CSV. Times are written as seconds with six decimals and read back exactly.
void write_victims_csv(std::ostream& os, const VictimTrace& trace);
VictimTrace read_victims_csv(std::istream& is, Time horizon);
void write_curve_csv(std::ostream& os, const CollisionCurve& curve);
void write_hops_csv(std::ostream& os, const std::vector<HopTrace>& traces);
void write_accuracy_csv(std::ostream& os, const std::vector<NodeView>& nodes,
                        const LinkTable& table);

/// "12.345678" for 12345678 µs; negative values keep their sign.
std::string format_seconds(Time t);
/// Inverse of format_seconds; also accepts fewer decimals. Throws
/// std::invalid_argument on malformed input.
Time parse_seconds(std::string_view s);

}  // namespace parmesh
