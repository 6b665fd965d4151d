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

#include "parmesh/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "parmesh/simulator.hpp"

namespace parmesh {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Duration kLateWindow = from_s(40);
constexpr Duration kCleanWindow = from_s(10);

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw OutputError("cannot write " + p.string());
  return os;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw OutputError("cannot create directory " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw OutputError("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Writes to a temporary name first so a crash never leaves a half file
// that would later count as complete.
void write_atomically(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    auto os = open_out(tmp);
    os << text;
    if (!os) throw OutputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

json time_or_null(const std::optional<Time>& t) {
  return t ? json(format_seconds(*t)) : json(nullptr);
}

std::optional<Time> time_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return parse_seconds(j.get<std::string>());
}

RunSummary summarize(const Simulator& sim, const VictimTrace& trace, std::uint64_t seed,
                     int index) {
  RunSummary s;
  s.seed = seed;
  s.index = index;
  s.n_slot = sim.scenario().timing.n_slot;
  s.consensus = consensus_time(trace);
  s.consensus_windowed = consensus_time_windowed(trace, kCleanWindow);
  s.settled = s.consensus && trace.horizon() - *s.consensus >= kCleanWindow;
  s.final_victims = trace.points().back().second;
  const Time horizon = trace.horizon();
  s.late_max_victims = trace.max_over(std::max(Time{0}, horizon - kLateWindow), horizon);
  const auto views = sim.node_views();
  for (const auto& h : hop_accuracy(views, sim.links())) {
    if (!h.bfs) continue;
    ++s.hop_checked;
    if (h.claimed == *h.bfs) ++s.hop_matches;
  }
  for (const auto& c : hidden_node_clashes(views, sim.links())) {
    ++s.hidden_clashes;
    if (!c.excused) ++s.hidden_clashes_unexcused;
  }
  s.transmissions = sim.transmissions();
  s.deliveries = sim.deliveries().size();
  return s;
}

Scenario with_n_slot(Scenario s, int n_slot) {
  s.timing.n_slot = n_slot;
  return s;
}

fs::path block_dir(const fs::path& out, int n_slot) {
  return out / ("nslot_" + std::to_string(n_slot));
}

fs::path run_dir(const fs::path& block, int index) {
  char name[32];
  std::snprintf(name, sizeof name, "run_%05d", index);
  return block / name;
}

RunSummary run_realization(const Scenario& scenario, int index, const fs::path& dir) {
  const std::uint64_t seed = realization_seed(scenario.seed, static_cast<std::uint64_t>(index));
  Simulator sim(scenario, seed, LogDetail::kMetrics);
  sim.run();
  const auto trace = victim_trace(sim.log(), sim.links(), scenario.horizon);
  const RunSummary summary = summarize(sim, trace, seed, index);
  ensure_dir(dir);
  std::ostringstream victims;
  write_victims_csv(victims, trace);
  write_atomically(dir / "victims.csv", victims.str());
  write_atomically(dir / "summary.json", summary_to_json(summary));
  return summary;
}

}  // namespace

std::string summary_to_json(const RunSummary& s) {
  json j;
  j["seed"] = s.seed;
  j["index"] = s.index;
  j["n_slot"] = s.n_slot;
  j["consensus_s"] = time_or_null(s.consensus);
  j["consensus_windowed_s"] = time_or_null(s.consensus_windowed);
  j["settled"] = s.settled;
  j["final_victims"] = s.final_victims;
  j["late_max_victims"] = s.late_max_victims;
  j["hop_matches"] = s.hop_matches;
  j["hop_checked"] = s.hop_checked;
  j["hidden_clashes"] = s.hidden_clashes;
  j["hidden_clashes_unexcused"] = s.hidden_clashes_unexcused;
  j["transmissions"] = s.transmissions;
  j["deliveries"] = s.deliveries;
  return j.dump(2) + "\n";
}

RunSummary summary_from_json(const std::string& text) {
  const json j = json::parse(text);
  RunSummary s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.index = j.at("index").get<int>();
  s.n_slot = j.at("n_slot").get<int>();
  s.consensus = time_from(j.at("consensus_s"));
  s.consensus_windowed = time_from(j.at("consensus_windowed_s"));
  s.settled = j.at("settled").get<bool>();
  s.final_victims = j.at("final_victims").get<int>();
  s.late_max_victims = j.at("late_max_victims").get<int>();
  s.hop_matches = j.at("hop_matches").get<int>();
  s.hop_checked = j.at("hop_checked").get<int>();
  s.hidden_clashes = j.at("hidden_clashes").get<int>();
  s.hidden_clashes_unexcused = j.at("hidden_clashes_unexcused").get<int>();
  s.transmissions = j.at("transmissions").get<std::uint64_t>();
  s.deliveries = j.at("deliveries").get<std::uint64_t>();
  return s;
}

RunSummary run_single(const Scenario& scenario, std::uint64_t seed, const fs::path& out) {
  ensure_dir(out);
  Simulator sim(scenario, seed, LogDetail::kFull);
  sim.run();
  const auto trace = victim_trace(sim.log(), sim.links(), scenario.horizon);
  const RunSummary summary = summarize(sim, trace, seed, 0);

  {
    auto os = open_out(out / "scenario.json");
    os << serialize_scenario(scenario);
  }
  {
    auto os = open_out(out / "events.log");
    sim.log().write(os);
  }
  {
    auto os = open_out(out / "links.csv");
    sim.links().write_csv(os);
  }
  {
    auto os = open_out(out / "victims.csv");
    write_victims_csv(os, trace);
  }
  {
    auto os = open_out(out / "hops.csv");
    write_hops_csv(os, hop_traces(sim.log(), sim.node_count()));
  }
  {
    auto os = open_out(out / "accuracy.csv");
    write_accuracy_csv(os, sim.node_views(), sim.links());
  }
  {
    auto os = open_out(out / "deliveries.csv");
    os << "t_s,node,origin,sequence,from,transmissions\n";
    for (const auto& d : sim.deliveries()) {
      os << format_seconds(d.time) << ',' << d.at << ',' << d.origin << ',' << d.sequence << ','
         << d.from << ',' << d.transmissions << '\n';
    }
  }
  write_atomically(out / "summary.json", summary_to_json(summary));
  return summary;
}

SweepResult aggregate_block(const fs::path& block, const Scenario& scenario, int n_slot) {
  SweepResult result;
  result.n_slot = n_slot;
  std::vector<fs::path> runs;
  if (fs::is_directory(block)) {
    for (const auto& e : fs::directory_iterator(block)) {
      if (e.is_directory() && fs::exists(e.path() / "summary.json")) runs.push_back(e.path());
    }
  }
  std::sort(runs.begin(), runs.end());
  std::vector<VictimTrace> traces;
  for (const auto& dir : runs) {
    result.runs.push_back(summary_from_json(read_file(dir / "summary.json")));
    std::ifstream is(dir / "victims.csv");
    if (!is) throw OutputError("missing " + (dir / "victims.csv").string());
    traces.push_back(read_victims_csv(is, scenario.horizon));
  }
  if (!traces.empty()) {
    result.curve = collision_curve(traces, scenario.collision_window, scenario.collision_step);
    std::ofstream os(block / "curve.csv", std::ios::binary);
    if (!os) throw OutputError("cannot write " + (block / "curve.csv").string());
    write_curve_csv(os, result.curve);
  }
  return result;
}

std::vector<SweepResult> run_sweep(const Scenario& scenario, const SweepOptions& options,
                                   const fs::path& out) {
  if (auto errors = scenario.validate(); !errors.empty()) throw ScenarioError(errors);
  if (options.realizations < 1) throw std::invalid_argument("realizations must be at least 1");
  ensure_dir(out);
  {
    auto os = open_out(out / "scenario.json");
    os << serialize_scenario(scenario);
  }

  std::vector<int> n_slots = scenario.sweep_n_slot;
  if (n_slots.empty()) n_slots.push_back(scenario.timing.n_slot);

  struct Job {
    std::size_t block;
    int index;
  };
  std::vector<Job> jobs;
  std::vector<int> resumed(n_slots.size(), 0);
  for (std::size_t b = 0; b < n_slots.size(); ++b) {
    const fs::path block = block_dir(out, n_slots[b]);
    ensure_dir(block);
    for (int i = 0; i < options.realizations; ++i) {
      if (fs::exists(run_dir(block, i) / "summary.json")) {
        ++resumed[b];
      } else {
        jobs.push_back({b, i});
      }
    }
  }

  std::vector<Scenario> variants;
  for (int k : n_slots) variants.push_back(with_n_slot(scenario, k));

  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        const Job& job = jobs[j];
        run_realization(variants[job.block], job.index,
                        run_dir(block_dir(out, n_slots[job.block]), job.index));
        const int d = ++done;
        if (options.progress) {
          std::lock_guard lock(mu);
          options.progress(d, static_cast<int>(jobs.size()));
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.jobs, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<SweepResult> results;
  json index = json::array();
  for (std::size_t b = 0; b < n_slots.size(); ++b) {
    auto r = aggregate_block(block_dir(out, n_slots[b]), variants[b], n_slots[b]);
    r.resumed = resumed[b];
    index.push_back({{"n_slot", n_slots[b]}, {"runs", r.runs.size()}});
    results.push_back(std::move(r));
  }
  write_atomically(out / "sweep.json", json{{"blocks", index}}.dump(2) + "\n");
  return results;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
}

namespace {

void report_runs(std::ostream& os, const std::vector<RunSummary>& runs) {
  std::vector<double> consensus;
  std::vector<double> settled;
  std::vector<double> late;
  int hop_ok = 0;
  int hop_all = 0;
  int clashes = 0;
  for (const auto& r : runs) {
    if (r.consensus) consensus.push_back(to_s(*r.consensus));
    if (r.settled) settled.push_back(to_s(*r.consensus));
    late.push_back(r.late_max_victims);
    hop_ok += r.hop_matches;
    hop_all += r.hop_checked;
    clashes += r.hidden_clashes_unexcused;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "  realizations: %zu, victim-free at the horizon: %zu, for the final 10 s: %zu "
                "(%.1f%%)\n",
                runs.size(), consensus.size(), settled.size(),
                runs.empty() ? 0.0 : 100.0 * settled.size() / runs.size());
  os << buf;
  if (!consensus.empty()) {
    std::snprintf(buf, sizeof buf, "  consensus time s: p10 %.3f  median %.3f  p90 %.3f\n",
                  quantile(consensus, 0.1), quantile(consensus, 0.5), quantile(consensus, 0.9));
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "  max victims over the last 40 s: median %.1f  max %.0f\n",
                quantile(late, 0.5), quantile(late, 1.0));
  os << buf;
  std::snprintf(buf, sizeof buf, "  hop numbers equal to BFS distance: %d of %d\n", hop_ok, hop_all);
  os << buf;
  std::snprintf(buf, sizeof buf, "  unexcused same-slot pairs with a shared hearer: %d\n", clashes);
  os << buf;
}

void report_curve(std::ostream& os, const CollisionCurve& curve) {
  if (curve.points.empty()) return;
  os << "  collision probability (window " << format_seconds(Time{curve.window}) << " s):";
  for (double t : {1.0, 5.0, 10.0, 20.0, 30.0, 40.0, 60.0, 100.0}) {
    const Time at = from_s(t);
    for (const auto& p : curve.points) {
      if (p.t == at) {
        char buf[48];
        std::snprintf(buf, sizeof buf, " t=%gs %.3f", t, p.probability);
        os << buf;
      }
    }
  }
  os << '\n';
}

}  // namespace

void write_report(const fs::path& out, std::ostream& os) {
  bool any = false;
  if (fs::exists(out / "summary.json") && fs::exists(out / "events.log")) {
    any = true;
    const RunSummary s = summary_from_json(read_file(out / "summary.json"));
    os << "single run (seed " << s.seed << ", n_slot " << s.n_slot << ")\n";
    report_runs(os, {s});
    os << "  transmissions: " << s.transmissions << ", deliveries: " << s.deliveries << '\n';
  }
  if (fs::exists(out / "sweep.json") && fs::exists(out / "scenario.json")) {
    const Scenario scenario = load_scenario((out / "scenario.json").string());
    const json index = json::parse(read_file(out / "sweep.json"));
    for (const auto& block : index.at("blocks")) {
      const int n_slot = block.at("n_slot").get<int>();
      auto r = aggregate_block(block_dir(out, n_slot), with_n_slot(scenario, n_slot), n_slot);
      if (r.runs.empty()) continue;
      any = true;
      os << "sweep '" << scenario.name << "' n_slot " << n_slot << " p "
         << scenario.timing.p_grant << '\n';
      report_runs(os, r.runs);
      report_curve(os, r.curve);
    }
  }
  if (!any) throw OutputError("no runs found in " + out.string());
}

}  // namespace parmesh
