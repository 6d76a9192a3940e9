// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the test suites: seeded generators, a scripted node
// context, a standard grid scenario and an independent reachability oracle.
#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "quakemesh/core.hpp"
#include "quakemesh/node/actor.hpp"
#include "quakemesh/protocol/messages.hpp"
#include "quakemesh/sim/report.hpp"
#include "quakemesh/sim/scenario.hpp"

namespace qmtest {

using namespace quakemesh;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline GeoLocation random_location(std::mt19937_64& rng) {
  return GeoLocation(uniform(rng, -90.0, 90.0), uniform(rng, -180.0, 180.0));
}

inline NodeId random_id(std::mt19937_64& rng, const char* prefix = "n") {
  return NodeId(std::string(prefix) + std::to_string(uniform_int(rng, 0, 999)));
}

inline SignalWindow random_window(std::mt19937_64& rng, std::size_t n) {
  SignalWindow w{random_id(rng, "p"), {}, uniform_int(rng, 0, 1'000'000), 0};
  for (std::size_t i = 0; i < n; ++i)
    w.samples.push_back({w.window_start_ms + static_cast<TimeMs>(i) * 10, uniform(rng, -2, 2), uniform(rng, -2, 2),
                         uniform(rng, -2, 2)});
  w.window_end_ms = w.window_start_ms + static_cast<TimeMs>(std::max<std::size_t>(n, 1)) * 10;
  return w;
}

inline protocol::EEWMessage random_eew(std::mt19937_64& rng) {
  return protocol::EEWMessage{{random_id(rng, "d"), static_cast<std::uint64_t>(uniform_int(rng, 0, 1 << 30))},
                              uniform_int(rng, 0, 1'000'000'000),
                              random_location(rng),
                              random_window(rng, static_cast<std::size_t>(uniform_int(rng, 0, 8))),
                              static_cast<std::uint32_t>(uniform_int(rng, 0, 16))};
}

inline protocol::NeighborEntry random_neighbor(std::mt19937_64& rng) {
  return {random_id(rng, "d"), "sim://" + std::to_string(uniform_int(rng, 0, 99)), random_location(rng)};
}

/// One envelope of the given kind with random contents.
inline protocol::Envelope random_envelope(std::mt19937_64& rng, std::size_t kind) {
  using namespace protocol;
  Payload p = Ping{};
  switch (kind % kKindCount) {
    case 0: p = ProbeHello{random_location(rng)}; break;
    case 1: p = SampleBatch{random_window(rng, static_cast<std::size_t>(uniform_int(rng, 0, 20))).samples}; break;
    case 2:
      p = Register{random_location(rng), "sim://x", uniform_int(rng, 0, 100000), uniform_int(rng, 0, 100000)};
      break;
    case 3: {
      RegisterAck a;
      for (auto i = uniform_int(rng, 0, 5); i > 0; --i) a.neighbors.push_back(random_neighbor(rng));
      p = a;
      break;
    }
    case 4: {
      ProbeQuery q{random_location(rng), {}};
      for (auto i = uniform_int(rng, 0, 3); i > 0; --i) q.exclude.push_back(random_id(rng, "d"));
      p = q;
      break;
    }
    case 5:
      p = uniform_int(rng, 0, 1) ? ProbeAssign{random_neighbor(rng)} : ProbeAssign{std::nullopt};
      break;
    case 6: p = Eew{random_eew(rng)}; break;
    case 7: p = EewLog{random_eew(rng), uniform_int(rng, 0, 100000)}; break;
    case 8: p = Ping{}; break;
    default: p = Pong{}; break;
  }
  return Envelope{random_id(rng), static_cast<std::uint64_t>(uniform_int(rng, 0, 1'000'000)), std::move(p)};
}

/// Records everything an actor does; sends fail for ids in `unreachable`.
class FakeContext final : public node::NodeContext {
 public:
  TimeMs now() const override { return now_ms; }
  bool send(const NodeId& to, const protocol::Envelope& env) override {
    sent.emplace_back(to, env);
    return !unreachable.contains(to);
  }
  void set_timer(TimeMs delay_ms, std::uint64_t id) override { timers.emplace_back(now_ms + delay_ms, id); }

  /// Sent envelopes of one kind, in order.
  std::vector<std::pair<NodeId, protocol::Envelope>> of(protocol::Kind k) const {
    std::vector<std::pair<NodeId, protocol::Envelope>> out;
    for (const auto& s : sent)
      if (s.second.kind() == k) out.push_back(s);
    return out;
  }
  /// Pops the earliest pending timer with the given kind.
  std::optional<std::uint64_t> take_timer(std::uint32_t kind) {
    for (auto it = timers.begin(); it != timers.end(); ++it)
      if (node::timer_kind(it->second) == kind) {
        const auto id = it->second;
        now_ms = std::max(now_ms, it->first);
        timers.erase(it);
        return id;
      }
    return std::nullopt;
  }

  TimeMs now_ms = 0;
  std::vector<std::pair<NodeId, protocol::Envelope>> sent;
  std::vector<std::pair<TimeMs, std::uint64_t>> timers;
  std::set<NodeId> unreachable;
};

/// 5x5 grid, 10 km spacing, co-located probes, one quake under the centre.
inline sim::Scenario grid_scenario(TimeMs quake_at_ms = 45000, TimeMs duration_ms = 75000) {
  sim::Scenario s;
  s.name = "grid25";
  s.duration_ms = duration_ms;
  s.detection.threshold_z = 6.0;
  sim::add_grid(s, sim::GridOptions{});
  sim::QuakeSource q{s.detectors[12].location};
  q.origin_time_ms = quake_at_ms;
  s.quakes.push_back(q);
  return s;
}

inline std::map<NodeId, GeoLocation> detector_locations(const sim::Scenario& s) {
  std::map<NodeId, GeoLocation> out;
  for (const auto& d : s.detectors) out.emplace(d.id, d.location);
  return out;
}

/// Detectors an EEW can reach from its origin: breadth-first over the peer
/// graph captured at origination, through live detectors only, where a node
/// passes the message on only while within range of the origin and under the
/// hop limit.
inline std::set<NodeId> bfs_reachable(const sim::OriginRecord& o, const std::map<NodeId, GeoLocation>& where,
                                      double max_distance_km, std::uint32_t max_hops) {
  const std::set<NodeId> live(o.live_detectors.begin(), o.live_detectors.end());
  std::set<NodeId> seen{o.origin};
  std::deque<std::pair<NodeId, std::uint32_t>> frontier{{o.origin, 0}};
  while (!frontier.empty()) {
    auto [u, hops] = frontier.front();
    frontier.pop_front();
    const bool relays = u == o.origin || (haversine_distance(where.at(u), o.origin_location) <= max_distance_km &&
                                          hops < max_hops);
    if (!relays) continue;
    auto it = o.topology.find(u);
    if (it == o.topology.end()) continue;
    for (const auto& [v, latency] : it->second) {
      (void)latency;
      if (live.contains(v) && seen.insert(v).second) frontier.emplace_back(v, hops + 1);
    }
  }
  return seen;
}

/// Detector ids in grid columns [first_col, last_col], with their probes.
inline std::vector<NodeId> grid_columns(int first_col, int last_col, int rows = 5) {
  std::vector<NodeId> out;
  for (char prefix : {'d', 'p'})
    for (int r = 0; r < rows; ++r)
      for (int c = first_col; c <= last_col; ++c) out.emplace_back(sim::grid_node_id(prefix, r, c));
  return out;
}

/// Grid split into columns 0-1 and 2-4 before the quake, healed afterwards.
inline sim::Scenario partitioned_grid(TimeMs split_ms = 20000, TimeMs heal_ms = 70000) {
  auto s = grid_scenario(45000, 90000);
  s.name = "partition";
  s.faults.push_back({split_ms, sim::FaultAction::Type::partition, std::nullopt, grid_columns(0, 1), grid_columns(2, 4)});
  s.faults.push_back({heal_ms, sim::FaultAction::Type::heal_partition, std::nullopt, {}, {}});
  return s;
}

/// Undirected view of an origin's peer graph restricted to live detectors.
inline std::map<NodeId, std::set<NodeId>> undirected(const sim::OriginRecord& o) {
  std::map<NodeId, std::set<NodeId>> g;
  const std::set<NodeId> live(o.live_detectors.begin(), o.live_detectors.end());
  for (const auto& id : live) g[id];
  for (const auto& [u, edges] : o.topology)
    for (const auto& [v, latency] : edges) {
      (void)latency;
      if (live.contains(u) && live.contains(v)) {
        g[u].insert(v);
        g[v].insert(u);
      }
    }
  return g;
}

/// Nodes whose removal disconnects the rest (brute force).
inline std::set<NodeId> cut_vertices(const std::map<NodeId, std::set<NodeId>>& g) {
  std::set<NodeId> cuts;
  for (const auto& [removed, ignored] : g) {
    (void)ignored;
    std::set<NodeId> seen;
    std::deque<NodeId> todo;
    for (const auto& [u, e] : g)
      if (u != removed) {
        seen.insert(u);
        todo.push_back(u);
        break;
      }
    while (!todo.empty()) {
      const auto u = todo.front();
      todo.pop_front();
      for (const auto& v : g.at(u))
        if (v != removed && seen.insert(v).second) todo.push_back(v);
    }
    if (seen.size() + 1 < g.size()) cuts.insert(removed);
  }
  return cuts;
}

inline std::set<NodeId> alerted_nodes(const sim::SimReport& r) {
  std::set<NodeId> out;
  for (const auto& a : r.alerts) out.insert(a.node);
  return out;
}

inline std::set<NodeId> alerted_for(const sim::SimReport& r, const std::string& message_id) {
  std::set<NodeId> out;
  for (const auto& a : r.alerts)
    if (a.message_id == message_id) out.insert(a.node);
  return out;
}

}  // namespace qmtest
