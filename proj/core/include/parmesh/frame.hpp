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

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "parmesh/types.hpp"

namespace parmesh {

struct NeighborSlot {
  NodeId id;
  std::uint8_t slot{0};

  friend bool operator==(const NeighborSlot&, const NeighborSlot&) = default;
};

/// Synchronization fields every frame carries: sender id, slot, hop and the
/// sender's heard set with the slots it last saw them on.
struct BeaconFrame {
  NodeId sender;
  std::uint8_t sender_slot{0};
  std::uint8_t sender_hop{0};
  std::vector<NeighborSlot> neighbors;

  friend bool operator==(const BeaconFrame&, const BeaconFrame&) = default;
};

/// A beacon that also carries one routed sensing message.
struct DataFrame {
  BeaconFrame beacon;
  NodeId origin;
  std::uint16_t sequence{0};
  NodeId next_hop;  // kBroadcast: any minimal-hop neighbor may accept
  std::vector<std::uint8_t> payload;

  friend bool operator==(const DataFrame&, const DataFrame&) = default;
};

using Frame = std::variant<BeaconFrame, DataFrame>;

inline const BeaconFrame& sync_fields(const Frame& f) {
  if (const auto* d = std::get_if<DataFrame>(&f)) return d->beacon;
  return std::get<BeaconFrame>(f);
}

namespace codec {

inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::uint8_t kBeaconType = 0x01;
inline constexpr std::uint8_t kDataType = 0x02;
inline constexpr std::size_t kHeaderSize = 6;
inline constexpr std::size_t kDataTrailerSize = 5;
inline constexpr std::size_t kMaxPayload = 64;

enum class DecodeError : std::uint8_t {
  kTruncated = 1,
  kUnsupportedVersion,
  kUnknownFrameType,
  kLengthMismatch,
  kInvalidField,
};

std::string_view to_string(DecodeError e);

/// Thrown by encode() when a frame violates its invariants.
class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<std::uint8_t> encode(const Frame& frame);

/// Total over all inputs: returns a frame or an error, never throws.
std::variant<Frame, DecodeError> decode(std::span<const std::uint8_t> bytes);

std::size_t encoded_size(const Frame& frame);

}  // namespace codec
}  // namespace parmesh
