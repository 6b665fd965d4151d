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
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace parmesh {

enum class FadingMode : std::uint8_t {
  kStatic,     // one Rayleigh draw per unordered pair per realization
  kPerPacket,  // redrawn for every directed transmission
  kNone,       // |h|^2 = 1, for deterministic topologies
};

std::string_view to_string(FadingMode m);
std::optional<FadingMode> fading_mode_from_string(std::string_view s);

struct ChannelParams {
  double eta{3.7};
  double shadow_sigma_db{6.0};
  double gamma0_db{20.0};
  double d0_m{10.0};
  double gamma_min_db{-5.0};
  double imbalance_sigma_db{3.0};
  FadingMode fading_mode{FadingMode::kStatic};

  std::vector<std::string> validate() const;
  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct Point {
  double x{0};
  double y{0};
  friend bool operator==(const Point&, const Point&) = default;
};

struct GridDeployment {
  int rows{1};
  int cols{1};
  double dx{1};
  double dy{1};
  double x0{0};
  double y0{0};
  friend bool operator==(const GridDeployment&, const GridDeployment&) = default;
};

struct UniformDeployment {
  double width{1};
  double height{1};
  int count{0};
  double x0{0};
  double y0{0};
  friend bool operator==(const UniformDeployment&, const UniformDeployment&) = default;
};

struct ExplicitDeployment {
  std::vector<Point> points;
  friend bool operator==(const ExplicitDeployment&, const ExplicitDeployment&) = default;
};

using DeploymentSpec = std::variant<GridDeployment, UniformDeployment, ExplicitDeployment>;

std::size_t node_count(const DeploymentSpec& spec);

/// Row-major for grids. Throws std::invalid_argument on nonpositive
/// dimensions.
std::vector<Point> place_nodes(const DeploymentSpec& spec, std::mt19937_64& rng);

/// God-view link realization. Nodes are addressed by index 0..N-1 (node id
/// index + 1). All queries are read-only.
class LinkTable {
 public:
  /// Draws shadowing and fading per unordered pair and imbalance per node.
  /// `attenuation_db`, when given, lowers each node's transmit level.
  static LinkTable realize(const std::vector<Point>& coords, const ChannelParams& params,
                           std::mt19937_64& rng, std::vector<double> attenuation_db = {});

  /// Builds a table from explicit random terms; used by tests and tools.
  LinkTable(std::vector<Point> coords, ChannelParams params, std::vector<double> shadow_db,
            std::vector<double> fade_power, std::vector<double> imbalance_db,
            std::vector<double> attenuation_db = {});

  std::size_t size() const { return coords_.size(); }
  const ChannelParams& params() const { return params_; }
  const std::vector<Point>& coords() const { return coords_; }

  double distance(std::size_t a, std::size_t b) const { return dist_[a * size() + b]; }
  double shadow_db(std::size_t a, std::size_t b) const { return shadow_[a * size() + b]; }
  double fade_power(std::size_t a, std::size_t b) const { return fade_[a * size() + b]; }
  double imbalance_db(std::size_t node) const { return imbalance_[node]; }
  double attenuation_db(std::size_t node) const { return attenuation_[node]; }

  /// SNR of tx's signal at rx, using the realized fading.
  double snr_db(std::size_t tx, std::size_t rx) const;
  /// Same link with an externally drawn fading power.
  double snr_db(std::size_t tx, std::size_t rx, double fade_power) const;
  /// rx can decode tx.
  bool accessible(std::size_t tx, std::size_t rx) const { return access_[rx * size() + tx] != 0; }

  void write_csv(std::ostream& os) const;

 private:
  void build_access();

  std::vector<Point> coords_;
  ChannelParams params_;
  std::vector<double> dist_;
  std::vector<double> shadow_;
  std::vector<double> fade_;
  std::vector<double> imbalance_;
  std::vector<double> attenuation_;
  std::vector<std::uint8_t> access_;
};

/// heard[n] = {m : m -> n decodable}; bidirectional[n] additionally needs
/// n -> m. Both sorted by index.
struct NeighborSets {
  std::vector<std::vector<std::size_t>> heard;
  std::vector<std::vector<std::size_t>> bidirectional;
};

/// `active`, when given, masks out nodes that are switched off.
NeighborSets true_neighbor_sets(const LinkTable& table, const std::vector<bool>& active = {});

}  // namespace parmesh
