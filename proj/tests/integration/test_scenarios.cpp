// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <future>
#include <thread>

#include "fixtures.hpp"
#include "quakemesh/cli/scenario_file.hpp"
#include "quakemesh/sim/simulator.hpp"

using namespace quakemesh;
using namespace quakemesh::sim;
namespace fs = std::filesystem;

namespace {

SimReport must_run(const Scenario& s, std::uint64_t seed) {
  auto r = run_scenario(s, seed);
  REQUIRE(r.has_value());
  return std::move(r).value();
}

// Runs independent seeds on a few threads; results come back in seed order.
std::vector<SimReport> sweep(const Scenario& s, std::uint64_t first, std::size_t count) {
  const std::size_t lanes = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<SimReport> out(count);
  std::vector<std::future<void>> jobs;
  for (std::size_t lane = 0; lane < lanes; ++lane)
    jobs.push_back(std::async(std::launch::async, [&, lane] {
      for (std::size_t i = lane; i < count; i += lanes) out[i] = run_scenario(s, first + i).value();
    }));
  for (auto& j : jobs) j.get();
  return out;
}

double distance_to_origin(const Scenario& s, const NodeId& id, const OriginRecord& o) {
  for (const auto& d : s.detectors)
    if (d.id == id) return haversine_distance(d.location, o.origin_location);
  return -1.0;
}

}  // namespace

TEST_CASE("grid: every detector alerts exactly once and matches the reachability oracle") {
  const auto s = qmtest::grid_scenario();
  const auto where = qmtest::detector_locations(s);
  for (std::uint64_t seed : {1, 2, 3}) {
    CAPTURE(seed);
    const auto r = must_run(s, seed);
    REQUIRE(r.origins.size() == 1);
    const auto& o = r.origins[0];
    CHECK(r.metrics.local_alerts == 1);
    CHECK(r.metrics.remote_alerts == 24);
    CHECK(r.metrics.coverage == 1.0);
    CHECK(qmtest::alerted_for(r, o.message_id) ==
          qmtest::bfs_reachable(o, where, s.gossip.max_distance_km, s.gossip.max_hops));
    CHECK(r.audit.passed());
  }
}

TEST_CASE("grid: seeds change the trace but not the coverage") {
  const auto s = qmtest::grid_scenario();
  const auto a = must_run(s, 11);
  const auto b = must_run(s, 12);
  CHECK(a.trace_digest != b.trace_digest);
  CHECK(qmtest::alerted_nodes(a) == qmtest::alerted_nodes(b));
  CHECK(a.metrics.coverage == b.metrics.coverage);
}

TEST_CASE("crash: survivors of a pre-quake crash all alert") {
  for (const char* victim : {"d22", "d00", "d13"}) {
    CAPTURE(victim);
    auto s = qmtest::grid_scenario();
    s.faults.push_back({20000, FaultAction::Type::crash_node, NodeId(victim), {}, {}});
    const auto r = must_run(s, 1);
    const auto where = qmtest::detector_locations(s);
    CHECK(r.metrics.detectors_live == 24);
    CHECK(r.metrics.coverage == 1.0);
    CHECK_FALSE(qmtest::alerted_nodes(r).contains(NodeId(victim)));
    for (const auto& o : r.origins) {
      CHECK(std::find(o.live_detectors.begin(), o.live_detectors.end(), NodeId(victim)) == o.live_detectors.end());
      CHECK(qmtest::alerted_for(r, o.message_id) ==
            qmtest::bfs_reachable(o, where, s.gossip.max_distance_km, s.gossip.max_hops));
    }
    CHECK(r.audit.passed());
  }
}

TEST_CASE("crash and revive: a revived detector rejoins the mesh") {
  auto s = qmtest::grid_scenario(60000, 90000);
  s.faults.push_back({10000, FaultAction::Type::crash_node, NodeId("d11"), {}, {}});
  s.faults.push_back({20000, FaultAction::Type::revive_node, NodeId("d11"), {}, {}});
  const auto r = must_run(s, 1);
  CHECK(r.metrics.detectors_live == 25);
  CHECK(r.metrics.coverage == 1.0);
  CHECK(qmtest::alerted_nodes(r).contains(NodeId("d11")));
  CHECK(r.audit.passed());
}

TEST_CASE("partition: each side warns itself, then the heal stays quiet") {
  const auto s = qmtest::partitioned_grid();
  const auto r = must_run(s, 1);
  const std::set<NodeId> west = [] {
    std::set<NodeId> w;
    for (const auto& id : qmtest::grid_columns(0, 1))
      if (id.str()[0] == 'd') w.insert(id);
    return w;
  }();

  std::set<NodeId> origins;
  for (const auto& o : r.origins) origins.insert(o.origin);
  CHECK(origins.size() >= 2);
  bool west_origin = false, east_origin = false;
  for (const auto& o : origins) (west.contains(o) ? west_origin : east_origin) = true;
  CHECK(west_origin);
  CHECK(east_origin);

  // Messages stay on their own side while the cut holds.
  for (const auto& a : r.alerts) CHECK(west.contains(a.node) == west.contains(a.origin));
  CHECK(r.metrics.coverage == 1.0);

  const TimeMs heal = s.faults.back().at_ms;
  for (const auto& t : r.transmissions)
    if (t.kind == protocol::Kind::Eew) CHECK(t.time_ms < heal);
  CHECK(r.audit.passed());
}

TEST_CASE("authority outage after bootstrap leaves gossip untouched") {
  const auto base = qmtest::grid_scenario();
  auto faulty = base;
  faulty.faults.push_back({30000, FaultAction::Type::authority_down, std::nullopt, {}, {}});
  for (std::uint64_t seed : {1, 2}) {
    const auto a = must_run(base, seed);
    const auto b = must_run(faulty, seed);
    CHECK(a.alerts == b.alerts);
    CHECK(a.metrics.coverage == b.metrics.coverage);
    CHECK(a.metrics.authority_log_entries == 1);
    CHECK(b.metrics.authority_log_entries == 0);
    CHECK(b.metrics.authority_report_failures > 0);
    CHECK(b.audit.passed());
  }
}

TEST_CASE("replicas converge on the same EEW log") {
  auto s = cli::load_scenario(fs::path(QM_SOURCE_DIR) / "scenarios" / "replicas.scenario");
  REQUIRE(s.has_value());
  Simulator sim(s.value(), 1);
  const auto r = sim.run();
  CHECK(r.audit.passed());
  CHECK(r.metrics.coverage == 1.0);
  const auto* a = sim.authority(NodeId("auth-a"));
  const auto* b = sim.authority(NodeId("auth-b"));
  REQUIRE(a);
  REQUIRE(b);
  CHECK_FALSE(a->service().registry().log().empty());
  CHECK(a->service().registry().log() == b->service().registry().log());
}

TEST_CASE("nodes beyond the range alert but never relay") {
  auto s = cli::load_scenario(fs::path(QM_SOURCE_DIR) / "scenarios" / "long_line.scenario");
  REQUIRE(s.has_value());
  const auto r = must_run(s.value(), 1);
  REQUIRE_FALSE(r.origins.empty());
  const auto& o = r.origins.front();
  std::size_t far_alerts = 0;
  for (const auto& id : qmtest::alerted_for(r, o.message_id))
    if (distance_to_origin(s.value(), id, o) > s.value().gossip.max_distance_km) ++far_alerts;
  CHECK(far_alerts > 0);
  for (const auto& t : r.transmissions) {
    if (t.kind != protocol::Kind::Eew || t.message_id != o.message_id || t.from == o.origin) continue;
    CHECK(distance_to_origin(s.value(), t.from, o) <= s.value().gossip.max_distance_km);
  }
  CHECK(r.audit.out_of_range_relays == 0);
}

TEST_CASE("a shake no stronger than the noise stays at the false-trigger rate") {
  auto s = qmtest::grid_scenario(30000, 90000);
  s.detection.threshold_z = 3.0;
  s.quakes[0].burst_amplitude_g = 0.001;
  std::size_t results = 0, triggers = 0;
  Simulator sim(s, 5);
  sim.set_detector_factory([&](node::DetectorConfig cfg, node::AlertSink a, node::ResultSink rs) {
    auto counting = [&, rs](const NodeId& d, const detection::DetectionResult& res, double th) {
      ++results;
      if (res.triggered) ++triggers;
      if (rs) rs(d, res, th);
    };
    return std::make_unique<node::Detector>(std::move(cfg), std::move(a), counting);
  });
  const auto r = sim.run();
  REQUIRE(results > 1000);
  const double rate = static_cast<double>(triggers) / static_cast<double>(results);
  MESSAGE("false-trigger rate with a noise-level shake: " << rate);
  CHECK(rate <= 0.4138 * 1.2);
  CHECK(r.audit.passed());
}

TEST_CASE("20% link loss: coverage over 100 seeds stays above 99%") {
  auto s = qmtest::grid_scenario();
  s.network.detector_link.loss_probability = 0.2;
  const auto where = qmtest::detector_locations(s);
  std::size_t reachable = 0, alerted = 0;
  for (const auto& r : sweep(s, 1000, 100)) {
    CHECK(r.audit.passed());
    // Reachability is judged on the lossless graph: loss only thins deliveries.
    std::set<NodeId> expected, got = qmtest::alerted_nodes(r);
    for (const auto& o : r.origins)
      for (const auto& id : qmtest::bfs_reachable(o, where, s.gossip.max_distance_km, s.gossip.max_hops))
        expected.insert(id);
    reachable += expected.size();
    for (const auto& id : expected) alerted += got.contains(id);
  }
  const double coverage = static_cast<double>(alerted) / static_cast<double>(reachable);
  MESSAGE("coverage under loss: " << coverage);
  CHECK(coverage >= 0.99);
}

TEST_CASE("bundled scenarios pass their audits on every seed") {
  for (const auto& e : fs::directory_iterator(fs::path(QM_SOURCE_DIR) / "scenarios")) {
    if (e.path().extension() != ".scenario") continue;
    auto s = cli::load_scenario(e.path());
    REQUIRE(s.has_value());
    for (auto seed : s.value().seeds) {
      CAPTURE(e.path().filename().string());
      CAPTURE(seed);
      const auto r = must_run(s.value(), seed);
      CHECK(r.audit.passed());
      CHECK(r.audit.privacy_violations == 0);
      CHECK(r.audit.hop_increment_violations == 0);
      CHECK(r.metrics.coverage == 1.0);
    }
  }
}
