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
#include <deque>
#include <random>

namespace parmesh {

/// Randomness injected into the protocol state machine. Grant draws use
/// uniform(); slot redraws and next-hop tie-breaks use index().
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  /// Uniform on [0, 1).
  virtual double uniform() = 0;
  /// Uniform on {0, ..., n-1}; n must be positive.
  virtual std::size_t index(std::size_t n) = 0;
};

/// Independent 64-bit stream keyed by (seed, stream, substream).
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t substream = 0);

class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::mt19937_64 engine) : engine_(engine) {}
  SeededRandom(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
      : engine_(make_engine(seed, stream, substream)) {}

  double uniform() override;
  std::size_t index(std::size_t n) override;

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Replays scripted draws first, then falls back to a seeded stream. Used to
/// force grant patterns and slot picks in walkthrough scenarios and tests.
class ScriptedRandom final : public RandomSource {
 public:
  ScriptedRandom(std::deque<double> uniforms, std::deque<std::size_t> picks,
                 SeededRandom fallback)
      : uniforms_(std::move(uniforms)), picks_(std::move(picks)), fallback_(std::move(fallback)) {}

  double uniform() override;
  std::size_t index(std::size_t n) override;

 private:
  std::deque<double> uniforms_;
  std::deque<std::size_t> picks_;
  SeededRandom fallback_;
};

}  // namespace parmesh
