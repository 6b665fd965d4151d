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

#include <array>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "parmesh/types.hpp"

namespace parmesh {

enum class LogKind : std::uint8_t {
  kBoot,
  kRole,
  kTimer,
  kTxStart,
  kTxEnd,
  kRx,
  kSlot,
  kSlotExhausted,
  kHop,
  kNeighborAdd,
  kNeighborRemove,
  kBidirAdd,
  kEnqueue,
  kDeliver,
  kDrop,
  kNodeOn,
  kNodeOff,
  kInject,
  kWarning,
};

std::string_view to_string(LogKind k);
std::optional<LogKind> log_kind_from_string(std::string_view s);

/// How much the simulator records. kMetrics keeps only what the metrics
/// module consumes (transmissions, power state, hop numbers, deliveries).
enum class LogDetail : std::uint8_t { kFull, kMetrics };

bool recorded_at(LogKind k, LogDetail detail);

struct LogField {
  std::string_view key;  // always one of the static keys in log_keys()
  std::int64_t value{0};
};

/// One line of the event log: `<time_us> <kind> <node> key=value ...`.
struct LogRecord {
  static constexpr std::size_t kMaxFields = 8;

  Time time{0};
  LogKind kind{LogKind::kWarning};
  NodeId node;
  std::array<LogField, kMaxFields> fields{};
  std::uint8_t field_count{0};

  LogRecord() = default;
  LogRecord(Time t, LogKind k, NodeId n, std::initializer_list<LogField> f);

  std::optional<std::int64_t> get(std::string_view key) const;
};

bool operator==(const LogRecord& a, const LogRecord& b);

/// Every key a record may carry, so parsed records can point at static
/// storage.
std::vector<std::string_view> log_keys();

class EventLog {
 public:
  explicit EventLog(LogDetail detail = LogDetail::kFull) : detail_(detail) {}

  LogDetail detail() const { return detail_; }
  bool wants(LogKind k) const { return recorded_at(k, detail_); }
  void add(LogRecord r) {
    if (wants(r.kind)) records_.push_back(r);
  }

  const std::vector<LogRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  void write(std::ostream& os) const;
  /// Throws std::runtime_error on a malformed line.
  static EventLog read(std::istream& is);

 private:
  LogDetail detail_;
  std::vector<LogRecord> records_;
};

void write_record(std::ostream& os, const LogRecord& r);

}  // namespace parmesh
