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

#include "parmesh/random.hpp"

#include <limits>
#include <stdexcept>

namespace parmesh {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(substream),
                    static_cast<std::uint32_t>(substream >> 32)};
  return std::mt19937_64(seq);
}

double SeededRandom::uniform() {
  // 53 random mantissa bits; identical on every platform.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t SeededRandom::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("index() over an empty range");
  // Rejection sampling keeps the draw exactly uniform and platform-stable.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double ScriptedRandom::uniform() {
  if (uniforms_.empty()) return fallback_.uniform();
  const double v = uniforms_.front();
  uniforms_.pop_front();
  return v;
}

std::size_t ScriptedRandom::index(std::size_t n) {
  if (picks_.empty()) return fallback_.index(n);
  const std::size_t v = picks_.front();
  picks_.pop_front();
  if (v >= n) throw std::out_of_range("scripted pick outside the offered range");
  return v;
}

}  // namespace parmesh
