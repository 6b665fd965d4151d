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

/**
 * @file
 *   Single runs, Monte Carlo sweeps and reports over an output directory.
 *
 *   Layout written by run_single:
 *     <out>/events.log  links.csv  victims.csv  hops.csv  accuracy.csv
 *     <out>/deliveries.csv  summary.json
 *
 *   Layout written by run_sweep, one block per n_slot value:
 *     <out>/nslot_<k>/run_<index>/victims.csv, summary.json
 *     <out>/nslot_<k>/curve.csv
 *     <out>/sweep.json
 *
 *   A realization counts as complete once its summary.json exists, so an
 *   interrupted sweep resumes where it stopped.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "parmesh/metrics.hpp"
#include "parmesh/scenario.hpp"

namespace parmesh {

/// Seed of realization `index` under base seed `base`.
constexpr std::uint64_t realization_seed(std::uint64_t base, std::uint64_t index) {
  return base ^ index;
}

struct RunSummary {
  std::uint64_t seed{0};
  int index{0};
  int n_slot{0};
  std::optional<Time> consensus;
  std::optional<Time> consensus_windowed;
  /// Victim-free over at least the final 10 s, so the consensus is not an
  /// accident of where the horizon cut a beacon cycle.
  bool settled{false};
  int final_victims{0};
  /// Largest victim count over the last 40 s before the horizon.
  int late_max_victims{0};
  int hop_matches{0};
  int hop_checked{0};
  int hidden_clashes{0};
  int hidden_clashes_unexcused{0};
  std::uint64_t transmissions{0};
  std::uint64_t deliveries{0};
};

std::string summary_to_json(const RunSummary& s);
RunSummary summary_from_json(const std::string& text);

/// Thrown for unusable output locations and empty report directories.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One realization with the complete log and every per-run CSV.
RunSummary run_single(const Scenario& scenario, std::uint64_t seed,
                      const std::filesystem::path& out);

struct SweepOptions {
  int realizations{1};
  int jobs{1};
  /// Called after each finished realization with (done, total).
  std::function<void(int, int)> progress;
};

struct SweepResult {
  int n_slot{0};
  CollisionCurve curve;
  std::vector<RunSummary> runs;
  int resumed{0};
};

/// Runs or resumes every realization, then aggregates by reading the
/// per-run CSVs back.
std::vector<SweepResult> run_sweep(const Scenario& scenario, const SweepOptions& options,
                                   const std::filesystem::path& out);

/// Recomputes the curve and summaries of one n_slot block from disk.
SweepResult aggregate_block(const std::filesystem::path& block, const Scenario& scenario,
                            int n_slot);

/// Human-readable summary of whatever runs and sweeps live under `out`.
/// Throws OutputError("no runs found ...") when there are none.
void write_report(const std::filesystem::path& out, std::ostream& os);

/// Value of the quantile q in [0, 1] with linear interpolation.
double quantile(std::vector<double> values, double q);

}  // namespace parmesh
