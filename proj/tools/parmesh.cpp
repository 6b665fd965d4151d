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

// parmesh: run single realizations, Monte Carlo sweeps and reports.
//
//   parmesh run --preset fig2-two-node --seed 7 --out runs/two-node
//   parmesh sweep --preset fig5a-sweep --jobs 8
//   parmesh report --out runs/two-node
//   parmesh preset-dump --preset fig3a-grid > grid.json

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "parmesh/scenario.hpp"
#include "parmesh/sweep.hpp"

namespace {

constexpr const char* kOutEnv = "PARMESH_OUT";

struct Source {
  std::string scenario_path;
  std::string preset;
};

void add_source(CLI::App* cmd, Source& src) {
  auto* file = cmd->add_option("--scenario", src.scenario_path, "Scenario JSON file")
                   ->check(CLI::ExistingFile);
  std::vector<std::string> names;
  for (auto p : parmesh::all_presets()) names.emplace_back(parmesh::to_string(p));
  auto* preset = cmd->add_option("--preset", src.preset, "Built-in scenario")
                     ->check(CLI::IsMember(names));
  file->excludes(preset);
  preset->excludes(file);
}

parmesh::Scenario load(const Source& src) {
  if (!src.scenario_path.empty()) return parmesh::load_scenario(src.scenario_path);
  if (src.preset.empty()) throw CLI::ValidationError("one of --scenario or --preset is required");
  return parmesh::make_preset(*parmesh::preset_from_string(src.preset));
}

std::string default_out(const std::string& leaf) {
  const char* env = std::getenv(kOutEnv);
  const std::string base = env && *env ? env : "parmesh-out";
  return base + "/" + leaf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for distributed slot assignment and hop-count routing"};
  app.require_subcommand(1);

  Source src;
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool full_scale = false;
  bool quiet = false;
  std::string out;

  auto* run = app.add_subcommand("run", "Simulate one realization with the full event log");
  add_source(run, src);
  run->add_option("--seed", seed, "Realization seed (default: scenario seed)");
  run->add_option("--out", out, "Output directory (default: $PARMESH_OUT/<name>)");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep; resumes completed realizations");
  add_source(sweep, src);
  sweep->add_option("--seed", seed, "Base seed (default: scenario seed)");
  sweep->add_option("--realizations", realizations, "Realizations per n_slot value")
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--full-scale", full_scale, "Use the full-scale realization count of the scenario");
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out, "Output directory (default: $PARMESH_OUT/<name>-sweep)");
  sweep->add_flag("--quiet", quiet, "No progress output");

  auto* report = app.add_subcommand("report", "Summarize the runs in an output directory");
  report->add_option("--out", out, "Directory written by run or sweep")->required();

  auto* dump = app.add_subcommand("preset-dump", "Print a scenario as editable JSON");
  add_source(dump, src);
  dump->add_option("--out", out, "Write to this file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto scenario = load(src);
      if (out.empty()) out = default_out(scenario.name);
      const auto summary = parmesh::run_single(scenario, seed.value_or(scenario.seed), out);
      std::cout << "wrote " << out << " (" << summary.transmissions << " transmissions)\n";
    } else if (sweep->parsed()) {
      auto scenario = load(src);
      if (seed) scenario.seed = *seed;
      parmesh::SweepOptions options;
      options.realizations = realizations.value_or(scenario.realizations);
      if (full_scale && scenario.full_realizations) {
        options.realizations = *scenario.full_realizations;
      }
      options.jobs = jobs;
      if (!quiet) {
        options.progress = [](int done, int total) {
          if (done == total || done % 10 == 0) std::cerr << "\r" << done << "/" << total << std::flush;
          if (done == total) std::cerr << '\n';
        };
      }
      if (out.empty()) out = default_out(scenario.name + "-sweep");
      const auto results = parmesh::run_sweep(scenario, options, out);
      for (const auto& r : results) {
        std::cout << "n_slot " << r.n_slot << ": " << r.runs.size() << " realizations ("
                  << r.resumed << " resumed)\n";
      }
      std::cout << "wrote " << out << '\n';
    } else if (report->parsed()) {
      parmesh::write_report(out, std::cout);
    } else if (dump->parsed()) {
      const std::string text = parmesh::serialize_scenario(load(src));
      if (out.empty()) {
        std::cout << text;
      } else {
        std::ofstream os(out);
        if (!(os << text)) throw parmesh::OutputError("cannot write " + out);
      }
    }
  } catch (const parmesh::ScenarioError& e) {
    std::cerr << "invalid scenario:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
