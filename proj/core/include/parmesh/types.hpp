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

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string_view>

namespace parmesh {

/// Simulated time and durations share one integer-microsecond representation.
using Duration = std::chrono::microseconds;
using Time = std::chrono::microseconds;

constexpr Duration from_ms(double ms) {
  return Duration{static_cast<std::int64_t>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5))};
}
constexpr Duration from_s(double s) { return from_ms(s * 1000.0); }
constexpr double to_s(Duration d) { return static_cast<double>(d.count()) / 1e6; }
constexpr double to_ms(Duration d) { return static_cast<double>(d.count()) / 1e3; }

/// Network-unique node identifier. Zero is reserved (broadcast next-hop on
/// the wire), so valid ids are 1..255.
struct NodeId {
  std::uint8_t value{0};

  constexpr bool valid() const { return value != 0; }
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

inline std::ostream& operator<<(std::ostream& os, NodeId id) {
  return os << static_cast<unsigned>(id.value);
}

constexpr NodeId kBroadcast{0};

enum class Role : std::uint8_t { P, R1, I, R2 };

constexpr std::string_view to_string(Role r) {
  switch (r) {
    case Role::P: return "P";
    case Role::R1: return "R1";
    case Role::I: return "I";
    case Role::R2: return "R2";
  }
  return "?";
}

constexpr bool is_listening(Role r) { return r == Role::R1 || r == Role::R2; }

}  // namespace parmesh

template <>
struct std::hash<parmesh::NodeId> {
  std::size_t operator()(parmesh::NodeId id) const noexcept { return id.value; }
};
