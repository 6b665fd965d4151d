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

#include "parmesh/channel.hpp"

#include <cmath>
#include <iomanip>
#include <stdexcept>

namespace parmesh {

std::string_view to_string(FadingMode m) {
  switch (m) {
    case FadingMode::kStatic: return "static";
    case FadingMode::kPerPacket: return "per-packet";
    case FadingMode::kNone: return "none";
  }
  return "?";
}

std::optional<FadingMode> fading_mode_from_string(std::string_view s) {
  if (s == "static") return FadingMode::kStatic;
  if (s == "per-packet") return FadingMode::kPerPacket;
  if (s == "none") return FadingMode::kNone;
  return std::nullopt;
}

std::vector<std::string> ChannelParams::validate() const {
  std::vector<std::string> errors;
  if (!(eta > 0)) errors.emplace_back("eta must be positive");
  if (!(d0_m > 0)) errors.emplace_back("d0_m must be positive");
  if (!(shadow_sigma_db >= 0)) errors.emplace_back("shadow_sigma_db must be non-negative");
  if (!(imbalance_sigma_db >= 0)) errors.emplace_back("imbalance_sigma_db must be non-negative");
  return errors;
}

std::size_t node_count(const DeploymentSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GridDeployment>) {
          return static_cast<std::size_t>(std::max(0, s.rows) * std::max(0, s.cols));
        } else if constexpr (std::is_same_v<T, UniformDeployment>) {
          return static_cast<std::size_t>(std::max(0, s.count));
        } else {
          return s.points.size();
        }
      },
      spec);
}

std::vector<Point> place_nodes(const DeploymentSpec& spec, std::mt19937_64& rng) {
  std::vector<Point> out;
  if (const auto* g = std::get_if<GridDeployment>(&spec)) {
    if (g->rows <= 0 || g->cols <= 0) throw std::invalid_argument("grid needs positive rows/cols");
    if (g->dx <= 0 || g->dy <= 0) throw std::invalid_argument("grid needs positive spacing");
    for (int r = 0; r < g->rows; ++r) {
      for (int c = 0; c < g->cols; ++c) out.push_back({g->x0 + c * g->dx, g->y0 + r * g->dy});
    }
  } else if (const auto* u = std::get_if<UniformDeployment>(&spec)) {
    if (u->width <= 0 || u->height <= 0 || u->count <= 0) {
      throw std::invalid_argument("uniform deployment needs positive width, height and count");
    }
    std::uniform_real_distribution<double> ux(0.0, u->width);
    std::uniform_real_distribution<double> uy(0.0, u->height);
    for (int i = 0; i < u->count; ++i) {
      const double x = ux(rng);
      const double y = uy(rng);
      out.push_back({u->x0 + x, u->y0 + y});
    }
  } else {
    out = std::get<ExplicitDeployment>(spec).points;
  }
  return out;
}

LinkTable::LinkTable(std::vector<Point> coords, ChannelParams params,
                     std::vector<double> shadow_db, std::vector<double> fade_power,
                     std::vector<double> imbalance_db, std::vector<double> attenuation_db)
    : coords_(std::move(coords)),
      params_(params),
      shadow_(std::move(shadow_db)),
      fade_(std::move(fade_power)),
      imbalance_(std::move(imbalance_db)),
      attenuation_(std::move(attenuation_db)) {
  const std::size_t n = coords_.size();
  if (attenuation_.empty()) attenuation_.assign(n, 0.0);
  if (shadow_.size() != n * n || fade_.size() != n * n || imbalance_.size() != n ||
      attenuation_.size() != n) {
    throw std::invalid_argument("link table term sizes do not match node count");
  }
  dist_.assign(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const double d = std::hypot(coords_[a].x - coords_[b].x, coords_[a].y - coords_[b].y);
      if (!(d > 0)) throw std::invalid_argument("co-located nodes have no defined path loss");
      dist_[a * n + b] = d;
    }
  }
  build_access();
}

LinkTable LinkTable::realize(const std::vector<Point>& coords, const ChannelParams& params,
                             std::mt19937_64& rng, std::vector<double> attenuation_db) {
  const std::size_t n = coords.size();
  std::vector<double> shadow(n * n, 0.0);
  std::vector<double> fade(n * n, 1.0);
  std::vector<double> imbalance(n, 0.0);
  std::normal_distribution<double> shadow_dist(0.0, 1.0);
  std::exponential_distribution<double> fade_dist(1.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double phi = params.shadow_sigma_db * shadow_dist(rng);
      const double h2 = fade_dist(rng);
      shadow[a * n + b] = shadow[b * n + a] = phi;
      if (params.fading_mode != FadingMode::kNone) fade[a * n + b] = fade[b * n + a] = h2;
    }
  }
  for (std::size_t a = 0; a < n; ++a) imbalance[a] = params.imbalance_sigma_db * shadow_dist(rng);
  return LinkTable(coords, params, std::move(shadow), std::move(fade), std::move(imbalance),
                   std::move(attenuation_db));
}

double LinkTable::snr_db(std::size_t tx, std::size_t rx) const {
  return snr_db(tx, rx, fade_power(tx, rx));
}

double LinkTable::snr_db(std::size_t tx, std::size_t rx, double fade_power) const {
  // Path loss lowers SNR with distance: -10 eta log10(d / d0).
  return params_.gamma0_db + imbalance_[tx] - attenuation_[tx] + shadow_db(rx, tx) +
         10.0 * std::log10(fade_power) -
         10.0 * params_.eta * std::log10(distance(rx, tx) / params_.d0_m);
}

void LinkTable::build_access() {
  const std::size_t n = size();
  access_.assign(n * n, 0);
  for (std::size_t rx = 0; rx < n; ++rx) {
    for (std::size_t tx = 0; tx < n; ++tx) {
      if (rx != tx && snr_db(tx, rx) > params_.gamma_min_db) access_[rx * n + tx] = 1;
    }
  }
}

void LinkTable::write_csv(std::ostream& os) const {
  os << "n,m,d,phi,h2,psi_m,snr,accessible\n";
  os << std::setprecision(10);
  for (std::size_t rx = 0; rx < size(); ++rx) {
    for (std::size_t tx = 0; tx < size(); ++tx) {
      if (rx == tx) continue;
      os << rx + 1 << ',' << tx + 1 << ',' << distance(rx, tx) << ',' << shadow_db(rx, tx) + 0.0 << ','
         << fade_power(rx, tx) << ',' << imbalance_[tx] - attenuation_[tx] << ','
         << snr_db(tx, rx) << ',' << (accessible(tx, rx) ? 1 : 0) << '\n';
    }
  }
}

NeighborSets true_neighbor_sets(const LinkTable& table, const std::vector<bool>& active) {
  const std::size_t n = table.size();
  auto on = [&](std::size_t i) { return active.empty() || active[i]; };
  NeighborSets sets;
  sets.heard.resize(n);
  sets.bidirectional.resize(n);
  for (std::size_t rx = 0; rx < n; ++rx) {
    if (!on(rx)) continue;
    for (std::size_t tx = 0; tx < n; ++tx) {
      if (tx == rx || !on(tx) || !table.accessible(tx, rx)) continue;
      sets.heard[rx].push_back(tx);
      if (table.accessible(rx, tx)) sets.bidirectional[rx].push_back(tx);
    }
  }
  return sets;
}

}  // namespace parmesh
