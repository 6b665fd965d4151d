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

#include "parmesh/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace parmesh {

using nlohmann::json;

std::string_view to_string(ScenarioEventKind k) {
  switch (k) {
    case ScenarioEventKind::kOn: return "on";
    case ScenarioEventKind::kOff: return "off";
    case ScenarioEventKind::kInject: return "inject";
  }
  return "?";
}

const NodeOverride* Scenario::override_for(NodeId id) const {
  for (const auto& o : overrides) {
    if (o.node == id) return &o;
  }
  return nullptr;
}

namespace {

void validate_deployment(const DeploymentSpec& spec, const std::string& path,
                         std::vector<std::string>& errors) {
  if (const auto* g = std::get_if<GridDeployment>(&spec)) {
    if (g->rows <= 0) errors.push_back(path + ".rows: must be positive");
    if (g->cols <= 0) errors.push_back(path + ".cols: must be positive");
    if (!(g->dx > 0)) errors.push_back(path + ".dx: must be positive");
    if (!(g->dy > 0)) errors.push_back(path + ".dy: must be positive");
  } else if (const auto* u = std::get_if<UniformDeployment>(&spec)) {
    if (!(u->width > 0)) errors.push_back(path + ".width: must be positive");
    if (!(u->height > 0)) errors.push_back(path + ".height: must be positive");
    if (u->count <= 0) errors.push_back(path + ".count: must be positive");
  }
}

}  // namespace

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> errors;
  for (const auto& e : timing.validate()) errors.push_back("timing: " + e);
  for (const auto& e : channel.validate()) errors.push_back("channel: " + e);
  validate_deployment(references, "deployment.references", errors);
  validate_deployment(sensing, "deployment.sensing", errors);
  const std::size_t total = node_total();
  if (total == 0 || total > 255) errors.emplace_back("deployment: node count must be in 1..255");
  if (horizon.count() <= 0) errors.emplace_back("horizon_s: must be positive");
  if (wake_window.count() < 0) errors.emplace_back("wake_window_s: must be non-negative");
  if (realizations < 1) errors.emplace_back("realizations: must be at least 1");
  if (full_realizations && *full_realizations < 1) {
    errors.emplace_back("full_realizations: must be at least 1");
  }
  if (collision_window.count() <= 0) errors.emplace_back("metrics.collision_window_s: must be positive");
  if (collision_step.count() <= 0) errors.emplace_back("metrics.collision_step_s: must be positive");
  for (std::size_t i = 0; i < sweep_n_slot.size(); ++i) {
    if (sweep_n_slot[i] < 1 || sweep_n_slot[i] > 255) {
      errors.push_back("sweep_n_slot[" + std::to_string(i) + "]: must be in 1..255");
    }
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    const std::string path = "events[" + std::to_string(i) + "]";
    if (ev.time.count() < 0 || ev.time >= horizon) {
      errors.push_back(path + ".t_s: must lie in [0, horizon)");
    }
    if (!ev.node.valid() || ev.node.value > total) errors.push_back(path + ".node: unknown node");
    if (ev.kind == ScenarioEventKind::kInject && ev.payload.size() > codec::kMaxPayload) {
      errors.push_back(path + ".payload: longer than 64 bytes");
    }
  }
  std::set<std::uint8_t> seen;
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    const auto& o = overrides[i];
    const std::string path = "nodes[" + std::to_string(i) + "]";
    if (!o.node.valid() || o.node.value > total) errors.push_back(path + ".id: unknown node");
    if (!seen.insert(o.node.value).second) errors.push_back(path + ".id: duplicate node id");
    if (o.initial_slot && (*o.initial_slot < 1 || *o.initial_slot > timing.n_slot)) {
      errors.push_back(path + ".initial_slot: outside 1..n_slot");
    }
    if (o.wake_offset && o.wake_offset->count() < 0) {
      errors.push_back(path + ".wake_offset_ms: must be non-negative");
    }
  }
  return errors;
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& p : v) {
    if (!s.empty()) s += "; ";
    s += p;
  }
  return s;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> problems)
    : std::runtime_error("invalid scenario: " + join(problems)), problems_(std::move(problems)) {}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

/// Reads one JSON object, collecting every problem instead of stopping at
/// the first.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) errors_.push_back(path_ + ": expected an object");
  }

  bool ok() const { return j_.is_object(); }

  template <typename T>
  std::optional<T> get(const std::string& key, bool required) {
    used_.insert(key);
    if (!ok()) return std::nullopt;
    auto it = j_.find(key);
    if (it == j_.end()) {
      if (required) errors_.push_back(where(key) + ": missing required field");
      return std::nullopt;
    }
    try {
      return it->template get<T>();
    } catch (const json::exception&) {
      errors_.push_back(where(key) + ": wrong type");
      return std::nullopt;
    }
  }

  const json* child(const std::string& key, bool required) {
    used_.insert(key);
    if (!ok()) return nullptr;
    auto it = j_.find(key);
    if (it == j_.end()) {
      if (required) errors_.push_back(where(key) + ": missing required field");
      return nullptr;
    }
    return &*it;
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Call after all reads; flags keys nobody asked for.
  void reject_unknown() {
    if (!ok()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) errors_.push_back(where(it.key()) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

template <typename T>
void assign(std::optional<T> v, T& out) {
  if (v) out = *v;
}

void assign_ms(std::optional<double> v, Duration& out) {
  if (v) out = from_ms(*v);
}

DeploymentSpec read_deployment(const json& j, const std::string& path,
                               std::vector<std::string>& errors) {
  ObjectReader r(j, path, errors);
  const auto kind = r.get<std::string>("kind", true);
  DeploymentSpec spec = ExplicitDeployment{};
  if (kind == "grid") {
    GridDeployment g;
    assign(r.get<int>("rows", true), g.rows);
    assign(r.get<int>("cols", true), g.cols);
    assign(r.get<double>("dx", true), g.dx);
    assign(r.get<double>("dy", true), g.dy);
    assign(r.get<double>("x0", false), g.x0);
    assign(r.get<double>("y0", false), g.y0);
    spec = g;
  } else if (kind == "uniform-random") {
    UniformDeployment u;
    assign(r.get<double>("width", true), u.width);
    assign(r.get<double>("height", true), u.height);
    assign(r.get<int>("count", true), u.count);
    assign(r.get<double>("x0", false), u.x0);
    assign(r.get<double>("y0", false), u.y0);
    spec = u;
  } else if (kind == "explicit") {
    ExplicitDeployment e;
    if (auto pts = r.get<std::vector<std::array<double, 2>>>("points", true)) {
      for (const auto& p : *pts) e.points.push_back({p[0], p[1]});
    }
    spec = e;
  } else if (kind) {
    errors.push_back(r.where("kind") + ": expected grid, uniform-random or explicit");
  }
  r.reject_unknown();
  return spec;
}

json write_deployment(const DeploymentSpec& spec) {
  if (const auto* g = std::get_if<GridDeployment>(&spec)) {
    return {{"kind", "grid"}, {"rows", g->rows}, {"cols", g->cols}, {"dx", g->dx},
            {"dy", g->dy},    {"x0", g->x0},     {"y0", g->y0}};
  }
  if (const auto* u = std::get_if<UniformDeployment>(&spec)) {
    return {{"kind", "uniform-random"}, {"width", u->width}, {"height", u->height},
            {"count", u->count},        {"x0", u->x0},       {"y0", u->y0}};
  }
  json pts = json::array();
  for (const auto& p : std::get<ExplicitDeployment>(spec).points) pts.push_back({p.x, p.y});
  return {{"kind", "explicit"}, {"points", pts}};
}

}  // namespace

Scenario parse_scenario_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError({std::string("json: ") + e.what()});
  }
  std::vector<std::string> errors;
  Scenario s;
  ObjectReader r(root, "", errors);

  if (auto schema = r.get<std::string>("schema", true); schema && *schema != kScenarioSchema) {
    errors.push_back("schema: unsupported version '" + *schema + "'");
  }
  assign(r.get<std::string>("name", false), s.name);

  if (const json* t = r.child("timing", true)) {
    ObjectReader tr(*t, "timing", errors);
    assign_ms(tr.get<double>("t_proc_ms", true), s.timing.t_proc);
    assign_ms(tr.get<double>("t_slot_ms", true), s.timing.t_slot);
    assign(tr.get<int>("n_slot", true), s.timing.n_slot);
    assign_ms(tr.get<double>("t_beacon_ms", true), s.timing.t_beacon);
    assign(tr.get<double>("p_grant", true), s.timing.p_grant);
    assign(tr.get<int>("n_max", true), s.timing.n_max);
    assign(tr.get<int>("h_na", true), s.timing.h_na);
    tr.reject_unknown();
  }

  if (const json* c = r.child("channel", true)) {
    ObjectReader cr(*c, "channel", errors);
    assign(cr.get<double>("eta", true), s.channel.eta);
    assign(cr.get<double>("shadow_sigma_db", true), s.channel.shadow_sigma_db);
    assign(cr.get<double>("gamma0_db", true), s.channel.gamma0_db);
    assign(cr.get<double>("d0_m", true), s.channel.d0_m);
    assign(cr.get<double>("gamma_min_db", true), s.channel.gamma_min_db);
    assign(cr.get<double>("imbalance_sigma_db", true), s.channel.imbalance_sigma_db);
    if (auto mode = cr.get<std::string>("fading_mode", false)) {
      if (auto m = fading_mode_from_string(*mode)) {
        s.channel.fading_mode = *m;
      } else {
        errors.emplace_back("channel.fading_mode: expected static, per-packet or none");
      }
    }
    cr.reject_unknown();
  }

  if (const json* d = r.child("deployment", true)) {
    ObjectReader dr(*d, "deployment", errors);
    if (const json* ref = dr.child("references", true)) {
      s.references = read_deployment(*ref, "deployment.references", errors);
    }
    if (const json* sen = dr.child("sensing", true)) {
      s.sensing = read_deployment(*sen, "deployment.sensing", errors);
    }
    dr.reject_unknown();
  }

  if (auto h = r.get<double>("horizon_s", true)) s.horizon = from_s(*h);
  if (auto w = r.get<double>("wake_window_s", false)) s.wake_window = from_s(*w);
  assign(r.get<int>("realizations", false), s.realizations);
  if (auto pr = r.get<int>("full_realizations", false)) s.full_realizations = *pr;
  assign(r.get<std::uint64_t>("seed", true), s.seed);
  if (auto fp = r.get<std::string>("forwarding_policy", false)) {
    if (auto p = forwarding_policy_from_string(*fp)) {
      s.forwarding_policy = *p;
    } else {
      errors.emplace_back("forwarding_policy: expected random-tie, best-rssi or broadcast-min");
    }
  }
  assign(r.get<std::vector<int>>("sweep_n_slot", false), s.sweep_n_slot);

  if (const json* m = r.child("metrics", false)) {
    ObjectReader mr(*m, "metrics", errors);
    if (auto w = mr.get<double>("collision_window_s", false)) s.collision_window = from_s(*w);
    if (auto st = mr.get<double>("collision_step_s", false)) s.collision_step = from_s(*st);
    mr.reject_unknown();
  }

  if (const json* evs = r.child("events", false)) {
    if (!evs->is_array()) {
      errors.emplace_back("events: expected an array");
    } else {
      for (std::size_t i = 0; i < evs->size(); ++i) {
        ObjectReader er((*evs)[i], "events[" + std::to_string(i) + "]", errors);
        ScenarioEvent ev;
        if (auto t = er.get<double>("t_s", true)) ev.time = from_s(*t);
        if (auto k = er.get<std::string>("kind", true)) {
          if (*k == "on") ev.kind = ScenarioEventKind::kOn;
          else if (*k == "off") ev.kind = ScenarioEventKind::kOff;
          else if (*k == "inject") ev.kind = ScenarioEventKind::kInject;
          else errors.push_back(er.where("kind") + ": expected on, off or inject");
        }
        if (auto n = er.get<int>("node", true)) {
          if (*n < 1 || *n > 255) errors.push_back(er.where("node") + ": must be in 1..255");
          else ev.node = NodeId{static_cast<std::uint8_t>(*n)};
        }
        assign(er.get<std::string>("payload", false), ev.payload);
        er.reject_unknown();
        s.events.push_back(std::move(ev));
      }
    }
  }

  if (const json* nodes = r.child("nodes", false)) {
    if (!nodes->is_array()) {
      errors.emplace_back("nodes: expected an array");
    } else {
      for (std::size_t i = 0; i < nodes->size(); ++i) {
        ObjectReader nr((*nodes)[i], "nodes[" + std::to_string(i) + "]", errors);
        NodeOverride o;
        if (auto n = nr.get<int>("id", true)) {
          if (*n < 1 || *n > 255) errors.push_back(nr.where("id") + ": must be in 1..255");
          else o.node = NodeId{static_cast<std::uint8_t>(*n)};
        }
        if (auto w = nr.get<double>("wake_offset_ms", false)) o.wake_offset = from_ms(*w);
        if (auto sl = nr.get<int>("initial_slot", false)) o.initial_slot = *sl;
        assign(nr.get<std::vector<bool>>("grant_script", false), o.grant_script);
        assign(nr.get<std::vector<std::size_t>>("pick_script", false), o.pick_script);
        assign(nr.get<double>("tx_attenuation_db", false), o.tx_attenuation_db);
        nr.reject_unknown();
        s.overrides.push_back(std::move(o));
      }
    }
  }
  r.reject_unknown();

  if (errors.empty()) {
    for (auto& e : s.validate()) errors.push_back(std::move(e));
  }
  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({path + ": cannot open file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_json(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
  json j;
  j["schema"] = kScenarioSchema;
  j["name"] = s.name;
  j["timing"] = {{"t_proc_ms", to_ms(s.timing.t_proc)},
                 {"t_slot_ms", to_ms(s.timing.t_slot)},
                 {"n_slot", s.timing.n_slot},
                 {"t_beacon_ms", to_ms(s.timing.t_beacon)},
                 {"p_grant", s.timing.p_grant},
                 {"n_max", s.timing.n_max},
                 {"h_na", s.timing.h_na}};
  j["channel"] = {{"eta", s.channel.eta},
                  {"shadow_sigma_db", s.channel.shadow_sigma_db},
                  {"gamma0_db", s.channel.gamma0_db},
                  {"d0_m", s.channel.d0_m},
                  {"gamma_min_db", s.channel.gamma_min_db},
                  {"imbalance_sigma_db", s.channel.imbalance_sigma_db},
                  {"fading_mode", to_string(s.channel.fading_mode)}};
  j["deployment"] = {{"references", write_deployment(s.references)},
                     {"sensing", write_deployment(s.sensing)}};
  j["horizon_s"] = to_s(s.horizon);
  j["wake_window_s"] = to_s(s.wake_window);
  j["realizations"] = s.realizations;
  if (s.full_realizations) j["full_realizations"] = *s.full_realizations;
  j["seed"] = s.seed;
  j["forwarding_policy"] = to_string(s.forwarding_policy);
  if (!s.sweep_n_slot.empty()) j["sweep_n_slot"] = s.sweep_n_slot;
  j["metrics"] = {{"collision_window_s", to_s(s.collision_window)},
                  {"collision_step_s", to_s(s.collision_step)}};
  json events = json::array();
  for (const auto& ev : s.events) {
    json e = {{"t_s", to_s(ev.time)}, {"kind", to_string(ev.kind)}, {"node", ev.node.value}};
    if (!ev.payload.empty()) e["payload"] = ev.payload;
    events.push_back(e);
  }
  j["events"] = events;
  json nodes = json::array();
  for (const auto& o : s.overrides) {
    json n = {{"id", o.node.value}};
    if (o.wake_offset) n["wake_offset_ms"] = to_ms(*o.wake_offset);
    if (o.initial_slot) n["initial_slot"] = *o.initial_slot;
    if (!o.grant_script.empty()) n["grant_script"] = o.grant_script;
    if (!o.pick_script.empty()) n["pick_script"] = o.pick_script;
    if (o.tx_attenuation_db != 0.0) n["tx_attenuation_db"] = o.tx_attenuation_db;
    nodes.push_back(n);
  }
  j["nodes"] = nodes;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

std::string_view to_string(PresetId p) {
  switch (p) {
    case PresetId::kFig3aGrid: return "fig3a-grid";
    case PresetId::kFig3bRandom: return "fig3b-random";
    case PresetId::kFig4Healing: return "fig4-healing";
    case PresetId::kFig5aSweep: return "fig5a-sweep";
    case PresetId::kFig5bSweep: return "fig5b-sweep";
    case PresetId::kFig2TwoNode: return "fig2-two-node";
    case PresetId::kDemo5Node: return "demo-5node";
  }
  return "?";
}

std::vector<PresetId> all_presets() {
  return {PresetId::kFig3aGrid,  PresetId::kFig3bRandom, PresetId::kFig4Healing,
          PresetId::kFig5aSweep, PresetId::kFig5bSweep,  PresetId::kFig2TwoNode,
          PresetId::kDemo5Node};
}

std::optional<PresetId> preset_from_string(std::string_view s) {
  for (auto p : all_presets()) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

namespace {

// Five references on one row, 30 m apart, across the 125 m x 100 m field.
GridDeployment reference_row() { return {1, 5, 30.0, 25.0, 2.5, 37.5}; }

Scenario field_base(std::string name, int n_slot, double p) {
  Scenario s;
  s.name = std::move(name);
  s.timing.n_slot = n_slot;
  s.timing.p_grant = p;
  s.references = reference_row();
  s.sensing = UniformDeployment{125.0, 100.0, 25, 0.0, 0.0};
  s.horizon = from_s(100);
  s.seed = 1;
  return s;
}

}  // namespace

Scenario make_preset(PresetId id) {
  switch (id) {
    case PresetId::kFig3aGrid: {
      Scenario s = field_base("fig3a-grid", 12, 0.5);
      // 5 x 5 lattice with its outer rows and columns on the field boundary.
      s.sensing = GridDeployment{5, 5, 31.25, 25.0, 0.0, 0.0};
      s.realizations = 50;
      return s;
    }
    case PresetId::kFig3bRandom: {
      Scenario s = field_base("fig3b-random", 16, 0.5);
      s.realizations = 50;
      return s;
    }
    case PresetId::kFig4Healing: {
      Scenario s = make_preset(PresetId::kFig3aGrid);
      s.name = "fig4-healing";
      for (std::uint8_t n = 1; n <= 4; ++n) {
        s.events.push_back({from_s(20), ScenarioEventKind::kOff, NodeId{n}, {}});
      }
      s.events.push_back({from_s(40), ScenarioEventKind::kOff, NodeId{5}, {}});
      s.events.push_back({from_s(70), ScenarioEventKind::kOn, NodeId{5}, {}});
      s.realizations = 10;
      return s;
    }
    case PresetId::kFig5aSweep: {
      Scenario s = field_base("fig5a-sweep", 20, 0.5);
      s.sweep_n_slot = {12, 16, 20};
      s.realizations = 200;
      s.full_realizations = 2000;
      return s;
    }
    case PresetId::kFig5bSweep: {
      Scenario s = field_base("fig5b-sweep", 20, 0.25);
      s.sweep_n_slot = {19, 20};
      s.realizations = 200;
      s.full_realizations = 2000;
      return s;
    }
    case PresetId::kFig2TwoNode: {
      Scenario s;
      s.name = "fig2-two-node";
      s.timing.n_slot = 4;
      s.timing.p_grant = 0.5;
      s.channel.shadow_sigma_db = 0.0;
      s.channel.imbalance_sigma_db = 0.0;
      s.channel.fading_mode = FadingMode::kNone;
      s.references = ExplicitDeployment{};
      s.sensing = ExplicitDeployment{{{0.0, 0.0}, {10.0, 0.0}}};
      s.horizon = from_s(1);
      s.seed = 1;
      // Node 2 wakes first so its first beacon lands in node 1's P period.
      NodeOverride n1{NodeId{1}, from_ms(8), 1, {true, true, true}, {}, 0.0};
      NodeOverride n2{NodeId{2}, from_ms(0), 1, {true, true, true}, {0}, 0.0};
      s.overrides = {n1, n2};
      return s;
    }
    case PresetId::kDemo5Node: {
      Scenario s;
      s.name = "demo-5node";
      s.timing.t_slot = from_ms(25);
      s.timing.t_proc = from_ms(100);
      s.timing.t_beacon = from_ms(10);
      s.timing.n_slot = 8;
      s.timing.n_max = 50;
      s.timing.h_na = 127;
      s.timing.p_grant = 0.5;
      s.channel.shadow_sigma_db = 0.0;
      s.channel.imbalance_sigma_db = 0.0;
      s.channel.fading_mode = FadingMode::kNone;
      s.references = ExplicitDeployment{{{0.0, 0.0}}};
      s.sensing = ExplicitDeployment{{{0.0, 10.0}, {-5.0, 5.0}, {12.0, 0.0}, {6.0, 0.0}}};
      s.horizon = from_s(20);
      s.seed = 1;
      // 30 dB pads on nodes 4 and 5: they hear everyone, few hear them.
      s.overrides = {NodeOverride{NodeId{4}, {}, {}, {}, {}, 30.0},
                     NodeOverride{NodeId{5}, {}, {}, {}, {}, 30.0}};
      s.events.push_back({from_s(10), ScenarioEventKind::kInject, NodeId{4}, "hello"});
      return s;
    }
  }
  throw std::invalid_argument("unknown preset");
}

}  // namespace parmesh
