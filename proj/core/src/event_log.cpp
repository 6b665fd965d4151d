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

#include "parmesh/event_log.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace parmesh {
namespace {

constexpr std::array<std::string_view, 19> kKindNames = {
    "boot",        "role",        "timer",           "tx_start", "tx_end",
    "rx",          "slot",        "slot_exhausted",  "hop",      "neighbor_add",
    "neighbor_remove", "bidir_add", "enqueue",        "deliver",  "drop",
    "node_on",     "node_off",    "inject",          "warning"};

constexpr std::array<std::string_view, 23> kKeys = {
    "role", "timer_us", "resync", "slot",    "hop",     "ref",   "tx",       "type",
    "origin", "seq",    "next_hop", "from",  "snr_cdb", "old",   "new",      "peer",
    "hops",   "aborted", "count",  "reason", "payload_len", "offset_us", "airtime_us"};

std::string_view intern_key(std::string_view k) {
  for (auto key : kKeys) {
    if (key == k) return key;
  }
  return {};
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(LogKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<LogKind> log_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<LogKind>(i);
  }
  return std::nullopt;
}

bool recorded_at(LogKind k, LogDetail detail) {
  if (detail == LogDetail::kFull) return true;
  switch (k) {
    case LogKind::kBoot:
    case LogKind::kTxStart:
    case LogKind::kTxEnd:
    case LogKind::kSlot:
    case LogKind::kSlotExhausted:
    case LogKind::kHop:
    case LogKind::kDeliver:
    case LogKind::kDrop:
    case LogKind::kNodeOn:
    case LogKind::kNodeOff:
    case LogKind::kInject:
    case LogKind::kWarning:
      return true;
    default:
      return false;
  }
}

std::vector<std::string_view> log_keys() { return {kKeys.begin(), kKeys.end()}; }

LogRecord::LogRecord(Time t, LogKind k, NodeId n, std::initializer_list<LogField> f)
    : time(t), kind(k), node(n) {
  if (f.size() > kMaxFields) throw std::length_error("too many log fields");
  for (const auto& field : f) fields[field_count++] = field;
}

std::optional<std::int64_t> LogRecord::get(std::string_view key) const {
  for (std::size_t i = 0; i < field_count; ++i) {
    if (fields[i].key == key) return fields[i].value;
  }
  return std::nullopt;
}

bool operator==(const LogRecord& a, const LogRecord& b) {
  if (a.time != b.time || a.kind != b.kind || a.node != b.node || a.field_count != b.field_count) {
    return false;
  }
  for (std::size_t i = 0; i < a.field_count; ++i) {
    if (a.fields[i].key != b.fields[i].key || a.fields[i].value != b.fields[i].value) return false;
  }
  return true;
}

void write_record(std::ostream& os, const LogRecord& r) {
  os << r.time.count() << ' ' << to_string(r.kind) << ' ' << r.node;
  for (std::size_t i = 0; i < r.field_count; ++i) {
    const auto& f = r.fields[i];
    os << ' ' << f.key << '=';
    if (f.key == "role") {
      os << to_string(static_cast<Role>(f.value));
    } else if (f.key == "type") {
      os << (f.value == 2 ? "data" : "beacon");
    } else {
      os << f.value;
    }
  }
  os << '\n';
}

void EventLog::write(std::ostream& os) const {
  for (const auto& r : records_) write_record(os, r);
}

EventLog EventLog::read(std::istream& is) {
  EventLog log(LogDetail::kFull);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw std::runtime_error("event log line " + std::to_string(lineno) + ": " + why);
    };
    std::istringstream ls(line);
    std::string t, kind, node;
    if (!(ls >> t >> kind >> node)) fail("expected time, kind and node");
    LogRecord r;
    auto tv = parse_int(t);
    auto k = log_kind_from_string(kind);
    auto nv = parse_int(node);
    if (!tv || !k || !nv || *nv < 0 || *nv > 255) fail("bad record header");
    r.time = Time{*tv};
    r.kind = *k;
    r.node = NodeId{static_cast<std::uint8_t>(*nv)};
    std::string kv;
    while (ls >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail("field without '='");
      const auto key = intern_key(std::string_view(kv).substr(0, eq));
      if (key.empty()) fail("unknown key '" + kv.substr(0, eq) + "'");
      const std::string val = kv.substr(eq + 1);
      std::optional<std::int64_t> v;
      if (key == "role") {
        for (auto role : {Role::P, Role::R1, Role::I, Role::R2}) {
          if (to_string(role) == val) v = static_cast<std::int64_t>(role);
        }
      } else if (key == "type") {
        if (val == "beacon") v = 1;
        if (val == "data") v = 2;
      } else {
        v = parse_int(val);
      }
      if (!v) fail("bad value for '" + std::string(key) + "'");
      if (r.field_count == LogRecord::kMaxFields) fail("too many fields");
      r.fields[r.field_count++] = {key, *v};
    }
    log.records_.push_back(r);
  }
  return log;
}

}  // namespace parmesh
