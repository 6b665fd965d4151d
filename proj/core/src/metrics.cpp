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

#include "parmesh/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace parmesh {

int conflict_count(const LinkTable& table, std::size_t n, const std::vector<bool>& transmitting) {
  int count = 0;
  for (std::size_t m = 0; m < transmitting.size(); ++m) {
    if (m != n && transmitting[m] && table.accessible(m, n)) ++count;
  }
  return count;
}

VictimTrace::VictimTrace(std::vector<std::pair<Time, int>> points, Time horizon)
    : points_(std::move(points)), horizon_(horizon) {
  if (points_.empty() || points_.front().first != Time{0}) {
    throw std::invalid_argument("victim trace must start at t=0");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].second < 0) throw std::invalid_argument("negative victim count");
    if (i > 0 && points_[i].first <= points_[i - 1].first) {
      throw std::invalid_argument("victim trace breakpoints must strictly increase");
    }
  }
  if (points_.back().first > horizon_ && horizon_ > Time{0}) {
    throw std::invalid_argument("victim trace breakpoint beyond the horizon");
  }
}

int VictimTrace::value_at(Time t) const {
  auto it = std::upper_bound(points_.begin(), points_.end(), t,
                             [](Time v, const auto& p) { return v < p.first; });
  if (it == points_.begin()) return 0;
  return std::prev(it)->second;
}

int VictimTrace::max_over(Time a, Time b) const {
  if (b <= a) return 0;
  auto it = std::upper_bound(points_.begin(), points_.end(), a,
                             [](Time v, const auto& p) { return v < p.first; });
  int best = it == points_.begin() ? 0 : std::prev(it)->second;
  for (; it != points_.end() && it->first < b; ++it) best = std::max(best, it->second);
  return best;
}

std::vector<TxInterval> transmissions_from_log(const EventLog& log) {
  std::vector<TxInterval> out;
  std::unordered_map<std::int64_t, std::size_t> open;
  for (const auto& r : log.records()) {
    if (r.kind == LogKind::kTxStart) {
      const auto id = r.get("tx").value_or(-1);
      const auto airtime = r.get("airtime_us").value_or(0);
      open[id] = out.size();
      out.push_back({static_cast<std::size_t>(r.node.value - 1u), r.time, r.time + Duration{airtime}});
    } else if (r.kind == LogKind::kTxEnd) {
      auto it = open.find(r.get("tx").value_or(-1));
      if (it == open.end()) continue;
      out[it->second].end = r.time;
      open.erase(it);
    }
  }
  return out;
}

VictimTrace victim_trace(const EventLog& log, const LinkTable& table, Time horizon) {
  const std::size_t n = table.size();
  // Change points: kind 0 = tx end, 1 = down, 2 = up, 3 = tx start. Within
  // one instant the order is irrelevant for the value after the instant.
  struct Change {
    Time t;
    int kind;
    std::size_t node;
  };
  std::vector<Change> changes;
  for (const auto& tx : transmissions_from_log(log)) {
    if (tx.end <= tx.start) continue;
    changes.push_back({tx.start, 3, tx.node});
    changes.push_back({tx.end, 0, tx.node});
  }
  for (const auto& r : log.records()) {
    if (!r.node.valid() || r.node.value > n) continue;
    if (r.kind == LogKind::kBoot) changes.push_back({r.time, 2, r.node.value - 1u});
    if (r.kind == LogKind::kNodeOff) changes.push_back({r.time, 1, r.node.value - 1u});
  }
  std::stable_sort(changes.begin(), changes.end(),
                   [](const Change& a, const Change& b) { return a.t < b.t; });

  std::vector<int> heard_tx(n, 0);
  std::vector<bool> up(n, false);
  int victims = 0;
  auto contributes = [&](std::size_t i) { return up[i] && heard_tx[i] > 1; };
  auto update = [&](std::size_t i, auto&& mutate) {
    victims -= contributes(i) ? 1 : 0;
    mutate();
    victims += contributes(i) ? 1 : 0;
  };

  std::vector<std::pair<Time, int>> points{{Time{0}, 0}};
  for (std::size_t i = 0; i < changes.size();) {
    const Time t = changes[i].t;
    if (t >= horizon) break;
    for (; i < changes.size() && changes[i].t == t; ++i) {
      const auto& c = changes[i];
      switch (c.kind) {
        case 0:
        case 3: {
          const int delta = c.kind == 3 ? 1 : -1;
          for (std::size_t rx = 0; rx < n; ++rx) {
            if (rx != c.node && table.accessible(c.node, rx)) {
              update(rx, [&] { heard_tx[rx] += delta; });
            }
          }
          break;
        }
        case 1: update(c.node, [&] { up[c.node] = false; }); break;
        case 2: update(c.node, [&] { up[c.node] = true; }); break;
      }
    }
    if (points.back().first == t) {
      points.back().second = victims;
      if (points.size() > 1 && points[points.size() - 2].second == victims) points.pop_back();
    } else if (points.back().second != victims) {
      points.emplace_back(t, victims);
    }
  }
  return VictimTrace(std::move(points), horizon);
}

CollisionCurve collision_curve(const std::vector<VictimTrace>& traces, Duration window,
                               Duration step) {
  if (traces.empty()) throw std::invalid_argument("collision curve needs at least one trace");
  if (window <= Duration{0} || step <= Duration{0}) {
    throw std::invalid_argument("window and step must be positive");
  }
  Time horizon = traces.front().horizon();
  for (const auto& tr : traces) horizon = std::min(horizon, tr.horizon());
  CollisionCurve curve{window, {}};
  const Duration half = window / 2;
  for (Time t{0}; t <= horizon; t += step) {
    const Time a = std::max(Time{0}, t - half);
    const Time b = std::min(horizon, t + (window - half));
    int hits = 0;
    for (const auto& tr : traces) hits += tr.any_positive(a, b) ? 1 : 0;
    const int count = static_cast<int>(traces.size());
    curve.points.push_back({t, static_cast<double>(hits) / count, count});
  }
  return curve;
}

std::optional<Time> consensus_time(const VictimTrace& trace) {
  const auto& pts = trace.points();
  if (pts.back().second != 0) return std::nullopt;
  return pts.back().first;
}

std::optional<Time> consensus_time_windowed(const VictimTrace& trace, Duration clean) {
  const auto& pts = trace.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].second != 0) continue;
    const Time end = i + 1 < pts.size() ? pts[i + 1].first : trace.horizon();
    if (end - pts[i].first >= clean) return pts[i].first;
  }
  return std::nullopt;
}

void HopTrace::set(Time t, std::optional<int> hop) {
  if (!points_.empty() && points_.back().first == t) {
    points_.back().second = hop;
    return;
  }
  if (!points_.empty() && points_.back().second == hop) return;
  points_.emplace_back(t, hop);
}

std::optional<int> HopTrace::at(Time t) const {
  auto it = std::upper_bound(points_.begin(), points_.end(), t,
                             [](Time v, const auto& p) { return v < p.first; });
  if (it == points_.begin()) return std::nullopt;
  return std::prev(it)->second;
}

std::vector<HopTrace> hop_traces(const EventLog& log, std::size_t node_count) {
  std::vector<HopTrace> traces(node_count);
  for (const auto& r : log.records()) {
    if (!r.node.valid() || r.node.value > node_count) continue;
    auto& tr = traces[r.node.value - 1u];
    switch (r.kind) {
      case LogKind::kBoot:
        tr.set(r.time, static_cast<int>(r.get("hop").value_or(0)));
        break;
      case LogKind::kHop:
        tr.set(r.time, static_cast<int>(r.get("new").value_or(0)));
        break;
      case LogKind::kNodeOff:
        tr.set(r.time, std::nullopt);
        break;
      default:
        break;
    }
  }
  return traces;
}

std::vector<std::optional<int>> bfs_hops(const LinkTable& table,
                                         const std::vector<bool>& is_reference,
                                         const std::vector<bool>& active) {
  const std::size_t n = table.size();
  auto on = [&](std::size_t i) { return active.empty() || active[i]; };
  std::vector<std::optional<int>> dist(n);
  std::queue<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    if (on(i) && i < is_reference.size() && is_reference[i]) {
      dist[i] = 0;
      frontier.push(i);
    }
  }
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < n; ++v) {
      if (v == u || dist[v] || !on(v)) continue;
      if (table.accessible(u, v) && table.accessible(v, u)) {
        dist[v] = *dist[u] + 1;
        frontier.push(v);
      }
    }
  }
  return dist;
}

namespace {

std::vector<bool> up_mask(const std::vector<NodeView>& nodes) {
  std::vector<bool> up(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) up[i] = nodes[i].up;
  return up;
}

}  // namespace

std::vector<HopCheck> hop_accuracy(const std::vector<NodeView>& nodes, const LinkTable& table) {
  std::vector<bool> refs(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) refs[i] = nodes[i].is_reference;
  const auto bfs = bfs_hops(table, refs, up_mask(nodes));
  std::vector<HopCheck> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].up) out.push_back({i, nodes[i].hop, bfs[i]});
  }
  return out;
}

double jaccard(std::vector<std::size_t> a, std::vector<std::size_t> b) {
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::size_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  const std::size_t uni = a.size() + b.size() - both.size();
  return static_cast<double>(both.size()) / static_cast<double>(uni);
}

std::vector<NeighborCheck> neighbor_accuracy(const std::vector<NodeView>& nodes,
                                             const LinkTable& table) {
  const auto truth = true_neighbor_sets(table, up_mask(nodes));
  std::vector<NeighborCheck> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!nodes[i].up) continue;
    out.push_back({i, jaccard(nodes[i].heard, truth.heard[i]),
                   jaccard(nodes[i].bidirectional, truth.bidirectional[i])});
  }
  return out;
}

std::vector<SlotClash> hidden_node_clashes(const std::vector<NodeView>& nodes,
                                           const LinkTable& table) {
  const auto truth = true_neighbor_sets(table, up_mask(nodes));
  std::vector<SlotClash> out;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t c = 0; c < nodes.size(); ++c) {
    const auto& heard = truth.heard[c];
    for (std::size_t i = 0; i < heard.size(); ++i) {
      for (std::size_t j = i + 1; j < heard.size(); ++j) {
        const std::size_t a = heard[i];
        const std::size_t b = heard[j];
        if (nodes[a].slot != nodes[b].slot || !seen.insert({a, b}).second) continue;
        const bool excused = nodes[a].slot_forced || nodes[b].slot_forced;
        out.push_back({a, b, c, excused});
      }
    }
  }
  return out;
}

std::string format_seconds(Time t) {
  const std::int64_t us = t.count();
  const std::uint64_t mag = us < 0 ? 0 - static_cast<std::uint64_t>(us) : us;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s%llu.%06llu", us < 0 ? "-" : "",
                static_cast<unsigned long long>(mag / 1000000),
                static_cast<unsigned long long>(mag % 1000000));
  return buf;
}

Time parse_seconds(std::string_view s) {
  auto bad = [&] { return std::invalid_argument("malformed seconds value '" + std::string(s) + "'"); };
  bool neg = false;
  std::string_view rest = s;
  if (!rest.empty() && rest.front() == '-') {
    neg = true;
    rest.remove_prefix(1);
  }
  const auto dot = rest.find('.');
  const std::string_view whole = rest.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
  if (whole.empty() || whole.front() == '-' || whole.front() == '+' || frac.size() > 6 ||
      (dot != std::string_view::npos && frac.empty())) {
    throw bad();
  }
  std::int64_t sec = 0;
  auto [p1, e1] = std::from_chars(whole.data(), whole.data() + whole.size(), sec);
  if (e1 != std::errc() || p1 != whole.data() + whole.size()) throw bad();
  std::int64_t micro = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    micro *= 10;
    if (i < frac.size()) {
      if (frac[i] < '0' || frac[i] > '9') throw bad();
      micro += frac[i] - '0';
    }
  }
  const std::int64_t total = sec * 1000000 + micro;
  return Time{neg ? -total : total};
}

void write_victims_csv(std::ostream& os, const VictimTrace& trace) {
  os << "t_s,victims\n";
  for (const auto& [t, v] : trace.points()) os << format_seconds(t) << ',' << v << '\n';
}

VictimTrace read_victims_csv(std::istream& is, Time horizon) {
  std::string line;
  if (!std::getline(is, line) || line != "t_s,victims") {
    throw std::runtime_error("victims CSV: expected header 't_s,victims'");
  }
  std::vector<std::pair<Time, int>> points;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("victims CSV: missing column");
    int v = 0;
    const char* first = line.data() + comma + 1;
    const char* last = line.data() + line.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) throw std::runtime_error("victims CSV: bad count");
    points.emplace_back(parse_seconds(std::string_view(line).substr(0, comma)), v);
  }
  return VictimTrace(std::move(points), horizon);
}

void write_curve_csv(std::ostream& os, const CollisionCurve& curve) {
  os << "t_s,probability,n_realizations\n";
  char buf[32];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.6f", p.probability);
    os << format_seconds(p.t) << ',' << buf << ',' << p.realizations << '\n';
  }
}

void write_hops_csv(std::ostream& os, const std::vector<HopTrace>& traces) {
  struct Row {
    Time t;
    std::size_t node;
    std::optional<int> hop;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    for (const auto& [t, h] : traces[i].points()) rows.push_back({t, i, h});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  os << "t_s,node,hop\n";
  for (const auto& r : rows) {
    os << format_seconds(r.t) << ',' << r.node + 1 << ',';
    if (r.hop) os << *r.hop;
    os << '\n';
  }
}

void write_accuracy_csv(std::ostream& os, const std::vector<NodeView>& nodes,
                        const LinkTable& table) {
  const auto hops = hop_accuracy(nodes, table);
  const auto nb = neighbor_accuracy(nodes, table);
  os << "node,reference,slot,claimed_hop,bfs_hop,jaccard_heard,jaccard_bidirectional\n";
  char buf[64];
  for (std::size_t k = 0; k < hops.size(); ++k) {
    const std::size_t i = hops[k].node;
    os << i + 1 << ',' << (nodes[i].is_reference ? 1 : 0) << ',' << nodes[i].slot << ','
       << hops[k].claimed << ',';
    if (hops[k].bfs) os << *hops[k].bfs;
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f", nb[k].heard, nb[k].bidirectional);
    os << buf << '\n';
  }
}

}  // namespace parmesh
