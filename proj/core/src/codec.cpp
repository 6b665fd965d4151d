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
#include <array>

#include "parmesh/frame.hpp"

namespace parmesh::codec {
namespace {

bool beacon_valid(const BeaconFrame& b) {
  if (!b.sender.valid() || b.sender_slot == 0) return false;
  if (b.neighbors.size() > 255) return false;
  std::array<bool, 256> seen{};
  for (const auto& n : b.neighbors) {
    if (!n.id.valid() || n.id == b.sender || n.slot == 0) return false;
    if (seen[n.id.value]) return false;
    seen[n.id.value] = true;
  }
  return true;
}

bool data_valid(const DataFrame& d) {
  return beacon_valid(d.beacon) && d.origin.valid() && d.next_hop != d.beacon.sender &&
         d.payload.size() <= kMaxPayload;
}

void put_beacon(std::vector<std::uint8_t>& out, const BeaconFrame& b, std::uint8_t type) {
  out.push_back(kVersion);
  out.push_back(type);
  out.push_back(b.sender.value);
  out.push_back(b.sender_slot);
  out.push_back(b.sender_hop);
  out.push_back(static_cast<std::uint8_t>(b.neighbors.size()));
  for (const auto& n : b.neighbors) {
    out.push_back(n.id.value);
    out.push_back(n.slot);
  }
}

}  // namespace

std::string_view to_string(DecodeError e) {
  switch (e) {
    case DecodeError::kTruncated: return "truncated";
    case DecodeError::kUnsupportedVersion: return "unsupported-version";
    case DecodeError::kUnknownFrameType: return "unknown-frame-type";
    case DecodeError::kLengthMismatch: return "length-mismatch";
    case DecodeError::kInvalidField: return "invalid-field";
  }
  return "unknown";
}

std::size_t encoded_size(const Frame& frame) {
  const auto& b = sync_fields(frame);
  std::size_t n = kHeaderSize + 2 * b.neighbors.size();
  if (const auto* d = std::get_if<DataFrame>(&frame)) n += kDataTrailerSize + d->payload.size();
  return n;
}

std::vector<std::uint8_t> encode(const Frame& frame) {
  std::vector<std::uint8_t> out;
  out.reserve(encoded_size(frame));
  if (const auto* b = std::get_if<BeaconFrame>(&frame)) {
    if (!beacon_valid(*b)) throw EncodeError("beacon frame violates field invariants");
    put_beacon(out, *b, kBeaconType);
    return out;
  }
  const auto& d = std::get<DataFrame>(frame);
  if (!data_valid(d)) throw EncodeError("data frame violates field invariants");
  put_beacon(out, d.beacon, kDataType);
  out.push_back(d.origin.value);
  out.push_back(static_cast<std::uint8_t>(d.sequence >> 8));
  out.push_back(static_cast<std::uint8_t>(d.sequence & 0xff));
  out.push_back(d.next_hop.value);
  out.push_back(static_cast<std::uint8_t>(d.payload.size()));
  out.insert(out.end(), d.payload.begin(), d.payload.end());
  return out;
}

std::variant<Frame, DecodeError> decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) return DecodeError::kTruncated;
  if (bytes[0] != kVersion) return DecodeError::kUnsupportedVersion;
  const std::uint8_t type = bytes[1];
  if (type != kBeaconType && type != kDataType) return DecodeError::kUnknownFrameType;
  if (bytes.size() < kHeaderSize) return DecodeError::kTruncated;

  BeaconFrame b;
  b.sender = NodeId{bytes[2]};
  b.sender_slot = bytes[3];
  b.sender_hop = bytes[4];
  const std::size_t count = bytes[5];
  const std::size_t beacon_end = kHeaderSize + 2 * count;
  if (bytes.size() < beacon_end) return DecodeError::kTruncated;
  b.neighbors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    b.neighbors.push_back({NodeId{bytes[kHeaderSize + 2 * i]}, bytes[kHeaderSize + 2 * i + 1]});
  }
  if (!beacon_valid(b)) return DecodeError::kInvalidField;

  if (type == kBeaconType) {
    if (bytes.size() != beacon_end) return DecodeError::kLengthMismatch;
    return Frame{std::move(b)};
  }

  if (bytes.size() < beacon_end + kDataTrailerSize) return DecodeError::kTruncated;
  const auto t = bytes.subspan(beacon_end);
  DataFrame d;
  d.beacon = std::move(b);
  d.origin = NodeId{t[0]};
  d.sequence = static_cast<std::uint16_t>((t[1] << 8) | t[2]);
  d.next_hop = NodeId{t[3]};
  const std::size_t len = t[4];
  if (len > kMaxPayload) return DecodeError::kInvalidField;
  if (t.size() < kDataTrailerSize + len) return DecodeError::kTruncated;
  if (t.size() != kDataTrailerSize + len) return DecodeError::kLengthMismatch;
  d.payload.assign(t.begin() + kDataTrailerSize, t.end());
  if (!data_valid(d)) return DecodeError::kInvalidField;
  return Frame{std::move(d)};
}

}  // namespace parmesh::codec
