// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/sim/scenario.hpp"

#include <cmath>
#include <set>

namespace quakemesh::sim {

std::string_view to_string(FaultAction::Type t) noexcept {
  switch (t) {
    case FaultAction::Type::crash_node: return "crash_node";
    case FaultAction::Type::revive_node: return "revive_node";
    case FaultAction::Type::partition: return "partition";
    case FaultAction::Type::heal_partition: return "heal_partition";
    case FaultAction::Type::authority_down: return "authority_down";
    case FaultAction::Type::authority_up: return "authority_up";
  }
  return "?";
}

namespace {

void check_link(std::vector<Diagnostic>& out, const std::string& field, const LinkSpec& l) {
  if (l.latency_ms < 0) out.push_back({field + ".latency_ms", "must be >= 0"});
  if (!(l.loss_probability >= 0.0 && l.loss_probability <= 1.0))
    out.push_back({field + ".loss", "must be in [0, 1]"});
}

}  // namespace

std::vector<Diagnostic> validate(const Scenario& s) {
  std::vector<Diagnostic> out;
  if (s.duration_ms <= 0) out.push_back({"duration_ms", "must be > 0"});
  if (s.seeds.empty()) out.push_back({"seeds", "at least one seed is required"});
  if (!(s.noise_floor_g >= 0.0) || !std::isfinite(s.noise_floor_g)) out.push_back({"noise_floor_g", "must be >= 0"});

  if (auto e = s.detection.validate(); !e.empty()) out.push_back({"detection", e});
  if (auto e = s.gossip.validate(); !e.empty()) out.push_back({"gossip", e});
  if (s.quorum.evaluation_window_ms <= 0) out.push_back({"detection.quorum_window_ms", "must be > 0"});

  if (s.authority.replicas.empty()) out.push_back({"authority.replicas", "at least one replica is required"});
  if (s.authority.k == 0) out.push_back({"authority.k", "must be >= 1"});
  if (s.authority.ttl_ms <= 0) out.push_back({"authority.ttl_ms", "must be > 0"});
  if (s.authority.reregister_ms <= 0) out.push_back({"authority.reregister_ms", "must be > 0"});
  if (s.authority.replication_interval_ms <= 0)
    out.push_back({"authority.replication_interval_ms", "must be > 0"});

  check_link(out, "network.detector_link", s.network.detector_link);
  check_link(out, "network.probe_link", s.network.probe_link);
  check_link(out, "network.authority_link", s.network.authority_link);

  std::set<NodeId> all, detectors, authorities;
  auto claim = [&](const NodeId& id, const std::string& field) {
    if (!all.insert(id).second) out.push_back({field, "duplicate node id '" + id.str() + "'"});
  };
  for (std::size_t i = 0; i < s.authority.replicas.size(); ++i) {
    claim(s.authority.replicas[i], "authority.replicas[" + std::to_string(i) + "]");
    authorities.insert(s.authority.replicas[i]);
  }
  for (std::size_t i = 0; i < s.detectors.size(); ++i) {
    const auto f = "detectors[" + std::to_string(i) + "]";
    claim(s.detectors[i].id, f + ".id");
    detectors.insert(s.detectors[i].id);
    if (s.detectors[i].boot_ms < 0) out.push_back({f + ".boot_ms", "must be >= 0"});
  }
  for (std::size_t i = 0; i < s.probes.size(); ++i) {
    const auto f = "probes[" + std::to_string(i) + "]";
    claim(s.probes[i].id, f + ".id");
    if (s.probes[i].boot_ms < 0) out.push_back({f + ".boot_ms", "must be >= 0"});
  }
  for (std::size_t i = 0; i < s.probes.size(); ++i) {
    const auto& fixed = s.probes[i].fixed_detector;
    if (fixed && !detectors.contains(*fixed))
      out.push_back({"probes[" + std::to_string(i) + "].detector", "unknown detector '" + fixed->str() + "'"});
  }
  for (const auto& [pair, link] : s.network.overrides) {
    const auto f = "network.links[" + pair.first.str() + "," + pair.second.str() + "]";
    if (!all.contains(pair.first) || !all.contains(pair.second)) out.push_back({f, "unknown node"});
    check_link(out, f, link);
  }

  for (std::size_t i = 0; i < s.quakes.size(); ++i) {
    const auto f = "quakes[" + std::to_string(i) + "]";
    const auto& q = s.quakes[i];
    if (q.origin_time_ms < 0) out.push_back({f + ".origin_time_ms", "must be >= 0"});
    if (!(q.wave_speed_km_s > 0.0)) out.push_back({f + ".wave_speed_km_s", "must be > 0"});
    if (!(q.burst_amplitude_g > 0.0)) out.push_back({f + ".amplitude_g", "must be > 0"});
    if (!(q.burst_duration_s > 0.0)) out.push_back({f + ".duration_s", "must be > 0"});
    if (!(q.burst_frequency_hz > 0.0)) out.push_back({f + ".frequency_hz", "must be > 0"});
    if (!(q.noise_floor_g >= 0.0)) out.push_back({f + ".noise_floor_g", "must be >= 0"});
  }

  for (std::size_t i = 0; i < s.faults.size(); ++i) {
    const auto f = "faults[" + std::to_string(i) + "]";
    const auto& a = s.faults[i];
    if (a.at_ms < 0) out.push_back({f + ".at_ms", "must be >= 0"});
    using T = FaultAction::Type;
    switch (a.type) {
      case T::crash_node:
      case T::revive_node:
        if (!a.node) out.push_back({f + ".node", "a target node is required"});
        else if (!all.contains(*a.node)) out.push_back({f + ".node", "unknown node '" + a.node->str() + "'"});
        break;
      case T::authority_down:
      case T::authority_up:
        if (a.node && !authorities.contains(*a.node))
          out.push_back({f + ".node", "'" + a.node->str() + "' is not an authority replica"});
        break;
      case T::partition: {
        std::set<NodeId> seen;
        for (const auto& [side, name] : {std::pair{&a.side_a, "side_a"}, std::pair{&a.side_b, "side_b"}}) {
          const auto sf = f + "." + name;
          if (side->empty()) out.push_back({sf, "partition side must be non-empty"});
          for (const auto& id : *side) {
            if (!all.contains(id)) out.push_back({sf, "unknown node '" + id.str() + "'"});
            if (!seen.insert(id).second) out.push_back({sf, "node '" + id.str() + "' is on both sides"});
          }
        }
        break;
      }
      case T::heal_partition: break;
    }
  }
  return out;
}

std::string grid_node_id(char prefix, int row, int col) {
  return std::string(1, prefix) + std::to_string(row) + std::to_string(col);
}

void add_grid(Scenario& s, const GridOptions& g) {
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const auto loc = g.origin.offset_km(r * g.spacing_km, 0.0).offset_km(0.0, c * g.spacing_km);
      const NodeId did(grid_node_id('d', r, c));
      s.detectors.push_back({did, loc, static_cast<TimeMs>(r * g.cols + c) * g.detector_boot_step_ms});
      if (g.colocated_probes) s.probes.push_back({NodeId(grid_node_id('p', r, c)), loc, g.probe_boot_ms, std::nullopt});
    }
  }
}

}  // namespace quakemesh::sim
