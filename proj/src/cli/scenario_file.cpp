// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/cli/scenario_file.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace quakemesh::cli {

std::string format(const FileDiagnostic& d, std::string_view file) {
  std::string out(file);
  if (d.line > 0) out += ":" + std::to_string(d.line);
  out += ": ";
  if (!d.field.empty()) out += d.field + ": ";
  return out + d.message;
}

namespace {

using sim::Scenario;

class Reader {
 public:
  std::vector<FileDiagnostic> errors;
  std::map<std::string, int> lines;  // field path -> line

  static int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

  void fail(const YAML::Node& n, const std::string& path, std::string msg) {
    errors.push_back({line_of(n), path, std::move(msg)});
  }

  bool expect_map(const YAML::Node& n, const std::string& path, std::initializer_list<std::string_view> keys) {
    lines.emplace(path, line_of(n));
    if (!n.IsMap()) {
      fail(n, path, "expected a mapping");
      return false;
    }
    const std::set<std::string_view> allowed(keys);
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) fail(kv.first, path.empty() ? key : path + "." + key, "unknown key");
    }
    return true;
  }

  template <class T>
  void get(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
    const YAML::Node n = parent[key];
    if (!n) return;
    const auto field = path.empty() ? std::string(key) : path + "." + key;
    lines[field] = line_of(n);
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, field, "expected " + describe<T>());
    }
  }

  template <class T>
  void require(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
    if (!parent[key]) {
      fail(parent, path.empty() ? std::string(key) : path + "." + key, "required");
      return;
    }
    get(parent, key, path, out);
  }

  std::optional<NodeId> node_id(const YAML::Node& n, const std::string& field) {
    lines[field] = line_of(n);
    std::string s;
    try {
      s = n.as<std::string>();
    } catch (const YAML::Exception&) {
      fail(n, field, "expected a node id");
      return std::nullopt;
    }
    if (s.empty()) {
      fail(n, field, "node id must not be empty");
      return std::nullopt;
    }
    return NodeId(s);
  }

  std::optional<GeoLocation> location(const YAML::Node& n, const std::string& field) {
    lines[field] = line_of(n);
    if (!n.IsSequence() || n.size() != 2) {
      fail(n, field, "expected [latitude, longitude]");
      return std::nullopt;
    }
    try {
      return GeoLocation(n[0].as<double>(), n[1].as<double>());
    } catch (const YAML::Exception&) {
      fail(n, field, "expected [latitude, longitude]");
    } catch (const std::invalid_argument& e) {
      fail(n, field, e.what());
    }
    return std::nullopt;
  }

  std::vector<NodeId> id_list(const YAML::Node& n, const std::string& field) {
    std::vector<NodeId> out;
    if (!n || !n.IsSequence()) {
      fail(n ? n : YAML::Node(), field, "expected a list of node ids");
      return out;
    }
    for (std::size_t i = 0; i < n.size(); ++i)
      if (auto id = node_id(n[i], field + "[" + std::to_string(i) + "]")) out.push_back(*id);
    return out;
  }

 private:
  template <class T>
  static std::string describe() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else return "a list of integers";
  }
};

void read_link(Reader& r, const YAML::Node& n, const std::string& path, sim::LinkSpec& link) {
  if (!n) return;
  if (!r.expect_map(n, path, {"latency_ms", "loss", "up"})) return;
  r.get(n, "latency_ms", path, link.latency_ms);
  r.get(n, "loss", path, link.loss_probability);
  r.get(n, "up", path, link.up);
}

void read_detection(Reader& r, const YAML::Node& n, Scenario& s) {
  if (!n) return;
  if (!r.expect_map(n, "detection",
                    {"algorithm", "window_ms", "slide_ms", "sample_rate_hz", "threshold_z", "baseline_horizon_ms",
                     "sta_s", "lta_s", "threshold_ratio", "quorum", "quorum_window_ms"}))
    return;
  auto& p = s.detection;
  std::string algo;
  r.get(n, "algorithm", "detection", algo);
  if (!algo.empty() && !detection::parse_algorithm(algo, p.algorithm))
    r.fail(n["algorithm"], "detection.algorithm", "unknown algorithm '" + algo + "' (zscore, sta_lta)");
  r.get(n, "window_ms", "detection", p.window_ms);
  r.get(n, "slide_ms", "detection", p.slide_ms);
  r.get(n, "sample_rate_hz", "detection", p.sample_rate_hz);
  r.get(n, "threshold_z", "detection", p.threshold_z);
  r.get(n, "baseline_horizon_ms", "detection", p.baseline_horizon_ms);
  r.get(n, "sta_s", "detection", p.sta_seconds);
  r.get(n, "lta_s", "detection", p.lta_seconds);
  r.get(n, "threshold_ratio", "detection", p.threshold_ratio);
  std::string quorum;
  r.get(n, "quorum", "detection", quorum);
  if (!quorum.empty() && !detection::parse_quorum_mode(quorum, s.quorum.mode))
    r.fail(n["quorum"], "detection.quorum", "unknown quorum mode '" + quorum + "' (any, majority, all)");
  r.get(n, "quorum_window_ms", "detection", s.quorum.evaluation_window_ms);
}

void read_grid(Reader& r, const YAML::Node& n, Scenario& s) {
  if (!n) return;
  if (!r.expect_map(n, "grid",
                    {"rows", "cols", "spacing_km", "origin", "colocated_probes", "detector_boot_step_ms",
                     "probe_boot_ms"}))
    return;
  sim::GridOptions g;
  r.get(n, "rows", "grid", g.rows);
  r.get(n, "cols", "grid", g.cols);
  r.get(n, "spacing_km", "grid", g.spacing_km);
  if (n["origin"])
    if (auto loc = r.location(n["origin"], "grid.origin")) g.origin = *loc;
  r.get(n, "colocated_probes", "grid", g.colocated_probes);
  r.get(n, "detector_boot_step_ms", "grid", g.detector_boot_step_ms);
  r.get(n, "probe_boot_ms", "grid", g.probe_boot_ms);
  if (g.rows < 1 || g.cols < 1 || g.rows > 9 || g.cols > 9) {
    r.fail(n, "grid", "rows and cols must be between 1 and 9");
    return;
  }
  if (!(g.spacing_km > 0.0)) {
    r.fail(n, "grid.spacing_km", "must be > 0");
    return;
  }
  const std::size_t d0 = s.detectors.size(), p0 = s.probes.size();
  sim::add_grid(s, g);
  for (std::size_t i = d0; i < s.detectors.size(); ++i) r.lines["detectors[" + std::to_string(i) + "]"] = Reader::line_of(n);
  for (std::size_t i = p0; i < s.probes.size(); ++i) r.lines["probes[" + std::to_string(i) + "]"] = Reader::line_of(n);
}

// Nodes listed explicitly are appended after any grid-generated ones.
void read_nodes(Reader& r, const YAML::Node& root, Scenario& s) {
  if (const auto ds = root["detectors"]) {
    if (!ds.IsSequence()) r.fail(ds, "detectors", "expected a list");
    else
      for (const auto& n : ds) {
        const auto path = "detectors[" + std::to_string(s.detectors.size()) + "]";
        if (!r.expect_map(n, path, {"id", "location", "boot_ms"})) continue;
        auto id = n["id"] ? r.node_id(n["id"], path + ".id") : std::nullopt;
        auto loc = n["location"] ? r.location(n["location"], path + ".location") : std::nullopt;
        if (!n["id"]) r.fail(n, path + ".id", "required");
        if (!n["location"]) r.fail(n, path + ".location", "required");
        if (!id || !loc) continue;
        sim::DetectorSpec d{*id, *loc, 0};
        r.get(n, "boot_ms", path, d.boot_ms);
        s.detectors.push_back(std::move(d));
      }
  }
  if (const auto ps = root["probes"]) {
    if (!ps.IsSequence()) r.fail(ps, "probes", "expected a list");
    else
      for (const auto& n : ps) {
        const auto path = "probes[" + std::to_string(s.probes.size()) + "]";
        if (!r.expect_map(n, path, {"id", "location", "boot_ms", "detector"})) continue;
        auto id = n["id"] ? r.node_id(n["id"], path + ".id") : std::nullopt;
        auto loc = n["location"] ? r.location(n["location"], path + ".location") : std::nullopt;
        if (!n["id"]) r.fail(n, path + ".id", "required");
        if (!n["location"]) r.fail(n, path + ".location", "required");
        if (!id || !loc) continue;
        sim::ProbeSpec p{*id, *loc, 1000, std::nullopt};
        r.get(n, "boot_ms", path, p.boot_ms);
        if (n["detector"]) p.fixed_detector = r.node_id(n["detector"], path + ".detector");
        s.probes.push_back(std::move(p));
      }
  }
}

std::optional<GeoLocation> node_location(const Scenario& s, const NodeId& id) {
  for (const auto& d : s.detectors)
    if (d.id == id) return d.location;
  for (const auto& p : s.probes)
    if (p.id == id) return p.location;
  return std::nullopt;
}

void read_quakes(Reader& r, const YAML::Node& qs, Scenario& s) {
  if (!qs) return;
  if (!qs.IsSequence()) {
    r.fail(qs, "quakes", "expected a list");
    return;
  }
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const auto& n = qs[i];
    const auto path = "quakes[" + std::to_string(i) + "]";
    if (!r.expect_map(n, path,
                      {"epicenter", "at_node", "origin_time_ms", "wave_speed_km_s", "amplitude_g", "duration_s",
                       "frequency_hz"}))
      continue;
    std::optional<GeoLocation> epicenter;
    if (n["epicenter"]) {
      epicenter = r.location(n["epicenter"], path + ".epicenter");
    } else if (n["at_node"]) {
      if (auto id = r.node_id(n["at_node"], path + ".at_node")) {
        epicenter = node_location(s, *id);
        if (!epicenter) r.fail(n["at_node"], path + ".at_node", "unknown node '" + id->str() + "'");
      }
    } else {
      r.fail(n, path + ".epicenter", "required (or at_node)");
    }
    if (!epicenter) continue;
    sim::QuakeSource q{*epicenter};
    q.noise_floor_g = s.noise_floor_g;
    r.require(n, "origin_time_ms", path, q.origin_time_ms);
    r.get(n, "wave_speed_km_s", path, q.wave_speed_km_s);
    r.get(n, "amplitude_g", path, q.burst_amplitude_g);
    r.get(n, "duration_s", path, q.burst_duration_s);
    r.get(n, "frequency_hz", path, q.burst_frequency_hz);
    s.quakes.push_back(q);
  }
}

void read_faults(Reader& r, const YAML::Node& fs, Scenario& s) {
  if (!fs) return;
  if (!fs.IsSequence()) {
    r.fail(fs, "faults", "expected a list");
    return;
  }
  static const std::map<std::string, sim::FaultAction::Type, std::less<>> kinds{
      {"crash_node", sim::FaultAction::Type::crash_node},
      {"revive_node", sim::FaultAction::Type::revive_node},
      {"partition", sim::FaultAction::Type::partition},
      {"heal_partition", sim::FaultAction::Type::heal_partition},
      {"authority_down", sim::FaultAction::Type::authority_down},
      {"authority_up", sim::FaultAction::Type::authority_up}};
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto& n = fs[i];
    const auto path = "faults[" + std::to_string(i) + "]";
    if (!r.expect_map(n, path, {"at_ms", "action", "node", "side_a", "side_b"})) continue;
    sim::FaultAction f;
    r.require(n, "at_ms", path, f.at_ms);
    std::string action;
    r.require(n, "action", path, action);
    auto kind = kinds.find(action);
    if (kind == kinds.end()) {
      if (!action.empty()) r.fail(n["action"], path + ".action", "unknown action '" + action + "'");
      continue;
    }
    f.type = kind->second;
    if (n["node"]) f.node = r.node_id(n["node"], path + ".node");
    if (f.type == sim::FaultAction::Type::partition) {
      f.side_a = r.id_list(n["side_a"], path + ".side_a");
      f.side_b = r.id_list(n["side_b"], path + ".side_b");
    }
    s.faults.push_back(std::move(f));
  }
  std::stable_sort(s.faults.begin(), s.faults.end(),
                   [](const auto& a, const auto& b) { return a.at_ms < b.at_ms; });
}

void read_network(Reader& r, const YAML::Node& n, Scenario& s) {
  if (!n) return;
  if (!r.expect_map(n, "network", {"detector_link", "probe_link", "authority_link", "links"})) return;
  read_link(r, n["detector_link"], "network.detector_link", s.network.detector_link);
  read_link(r, n["probe_link"], "network.probe_link", s.network.probe_link);
  read_link(r, n["authority_link"], "network.authority_link", s.network.authority_link);
  if (const auto ls = n["links"]) {
    if (!ls.IsSequence()) {
      r.fail(ls, "network.links", "expected a list");
      return;
    }
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const auto& l = ls[i];
      const auto path = "network.links[" + std::to_string(i) + "]";
      if (!r.expect_map(l, path, {"between", "latency_ms", "loss", "up"})) continue;
      auto ends = r.id_list(l["between"], path + ".between");
      if (ends.size() != 2) {
        r.fail(l, path + ".between", "expected exactly two node ids");
        continue;
      }
      sim::LinkSpec spec = s.network.detector_link;
      r.get(l, "latency_ms", path, spec.latency_ms);
      r.get(l, "loss", path, spec.loss_probability);
      r.get(l, "up", path, spec.up);
      auto key = ends[0] < ends[1] ? std::pair{ends[0], ends[1]} : std::pair{ends[1], ends[0]};
      s.network.overrides.insert_or_assign(std::move(key), spec);
    }
  }
}

int line_for(const std::map<std::string, int>& lines, std::string field) {
  // Longest recorded prefix of the field path.
  while (true) {
    if (auto it = lines.find(field); it != lines.end()) return it->second;
    const auto cut = field.find_last_of(".[");
    if (cut == std::string::npos || cut == 0) break;
    field.resize(cut);
  }
  return 0;
}

}  // namespace

Expected<sim::Scenario, std::vector<FileDiagnostic>> parse_scenario(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    return unexpected(std::vector<FileDiagnostic>{{e.mark.line + 1, "", e.msg}});
  }
  Reader r;
  if (!root || !root.IsMap()) return unexpected(std::vector<FileDiagnostic>{{1, "", "expected a mapping document"}});
  if (!r.expect_map(root, "",
                    {"schema", "name", "duration_ms", "seeds", "noise_floor_g", "suppress_after_remote", "authority",
                     "gossip", "detection", "network", "grid", "detectors", "probes", "quakes", "faults"}))
    return unexpected(std::move(r.errors));

  std::string schema;
  r.require(root, "schema", "", schema);
  if (!schema.empty() && schema != kScenarioSchema)
    r.fail(root["schema"], "schema", "unsupported schema '" + schema + "' (expected " + std::string(kScenarioSchema) + ")");

  Scenario s;
  r.get(root, "name", "", s.name);
  r.require(root, "duration_ms", "", s.duration_ms);
  r.get(root, "seeds", "", s.seeds);
  r.get(root, "noise_floor_g", "", s.noise_floor_g);
  r.get(root, "suppress_after_remote", "", s.suppress_after_remote);

  if (const auto a = root["authority"];
      a && r.expect_map(a, "authority", {"replicas", "k", "ttl_ms", "reregister_ms", "replication_interval_ms"})) {
    if (a["replicas"]) s.authority.replicas = r.id_list(a["replicas"], "authority.replicas");
    r.get(a, "k", "authority", s.authority.k);
    r.get(a, "ttl_ms", "authority", s.authority.ttl_ms);
    r.get(a, "reregister_ms", "authority", s.authority.reregister_ms);
    r.get(a, "replication_interval_ms", "authority", s.authority.replication_interval_ms);
  }
  if (const auto g = root["gossip"];
      g && r.expect_map(g, "gossip", {"max_distance_km", "max_hops", "dedup_capacity"})) {
    r.get(g, "max_distance_km", "gossip", s.gossip.max_distance_km);
    r.get(g, "max_hops", "gossip", s.gossip.max_hops);
    r.get(g, "dedup_capacity", "gossip", s.gossip.dedup_capacity);
  }
  read_detection(r, root["detection"], s);
  read_grid(r, root["grid"], s);
  read_nodes(r, root, s);
  read_network(r, root["network"], s);
  read_quakes(r, root["quakes"], s);
  read_faults(r, root["faults"], s);

  if (!r.errors.empty()) return unexpected(std::move(r.errors));
  std::vector<FileDiagnostic> out;
  for (auto& d : sim::validate(s)) out.push_back({line_for(r.lines, d.field), d.field, d.message});
  if (!out.empty()) return unexpected(std::move(out));
  return s;
}

Expected<sim::Scenario, std::vector<FileDiagnostic>> load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return unexpected(std::vector<FileDiagnostic>{{0, "", "cannot open file"}});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace quakemesh::cli
