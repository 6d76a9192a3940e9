// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "doctest.h"
#include "fixtures.hpp"
#include "quakemesh/node/detector.hpp"
#include "quakemesh/node/probe.hpp"
#include "quakemesh/sim/synthetic.hpp"

using namespace quakemesh;
using namespace quakemesh::node;
using namespace quakemesh::protocol;
using qmtest::FakeContext;

namespace {

const GeoLocation kHere(41.9, 12.5);
const NodeId kAuth("authority");

DetectorConfig detector_config(const char* id = "d0") {
  DetectorConfig c{.id = NodeId(id), .location = kHere, .endpoint = "sim://d0", .authorities = {kAuth}};
  return c;
}

Envelope from(const char* sender, Payload p) { return {NodeId(sender), 1, std::move(p)}; }

EEWMessage eew_from(const char* origin, std::uint64_t seq, GeoLocation where, std::uint32_t hops = 0) {
  return {{NodeId(origin), seq}, 1000, where, {NodeId("p"), {}, 0, 2000}, hops};
}

/// Detector with peers d1..d3 registered through the normal path.
struct Wired {
  std::vector<AlertEvent> alerts;
  Detector det;
  FakeContext ctx;
  explicit Wired(DetectorConfig cfg = detector_config())
      : det(std::move(cfg), [this](const AlertEvent& a) { alerts.push_back(a); }) {
    det.start(ctx);
    RegisterAck ack;
    for (const char* n : {"d1", "d2", "d3"}) ack.neighbors.push_back({NodeId(n), "", kHere.offset_km(5, 0)});
    det.on_message(ctx, kAuth, from("authority", ack));
    ctx.sent.clear();
  }
};

std::vector<TimeMs> delays_of(FakeContext& ctx, std::uint32_t kind, TimeMs since) {
  std::vector<TimeMs> out;
  for (const auto& [at, id] : ctx.timers)
    if (timer_kind(id) == kind) out.push_back(at - since);
  return out;
}

}  // namespace

TEST_CASE("backoff doubles up to the cap") {
  Backoff b(1000, 60000);
  std::vector<TimeMs> seq;
  for (int i = 0; i < 9; ++i) seq.push_back(b.next());
  CHECK(seq == std::vector<TimeMs>{1000, 2000, 4000, 8000, 16000, 32000, 60000, 60000, 60000});
  b.reset();
  CHECK(b.next() == 1000);
}

TEST_CASE("timer ids carry kind and generation") {
  constexpr auto id = make_timer(7, 0xdeadbeef);
  static_assert(timer_kind(id) == 7);
  static_assert(timer_generation(id) == 0xdeadbeef);
}

TEST_CASE("detector registers, then pings its neighbours") {
  Detector det(detector_config());
  FakeContext ctx;
  det.start(ctx);
  auto regs = ctx.of(Kind::Register);
  REQUIRE(regs.size() == 1);
  CHECK(regs[0].first == kAuth);
  CHECK(std::get<Register>(regs[0].second.payload).ttl_ms == 90000);

  ctx.unreachable.insert(NodeId("d2"));
  RegisterAck ack{{{NodeId("d1"), "", kHere}, {NodeId("d2"), "", kHere}, {NodeId("d0"), "", kHere}}};
  det.on_message(ctx, kAuth, from("authority", ack));
  CHECK(det.registered());
  CHECK(ctx.of(Kind::Ping).size() == 2);  // never itself
  CHECK(det.peers() == std::set<NodeId>{NodeId("d1")});
  CHECK(delays_of(ctx, 2, 0).back() == 30000);  // next registration round
}

TEST_CASE("unreachable authority: registration retries with backoff") {
  Detector det(detector_config());
  FakeContext ctx;
  ctx.unreachable.insert(kAuth);
  det.start(ctx);
  for (int i = 0; i < 3; ++i) {
    auto id = ctx.take_timer(2);
    REQUIRE(id.has_value());
    det.on_timer(ctx, *id);
  }
  CHECK(det.stats().registration_failures == 4);
  CHECK_FALSE(det.registered());
  // 1 s, 2 s, 4 s, then 8 s pending.
  CHECK(ctx.now_ms == 7000);
  CHECK(delays_of(ctx, 2, 7000) == std::vector<TimeMs>{8000});
}

TEST_CASE("a lost RegisterAck times out and is retried") {
  Detector det(detector_config());
  FakeContext ctx;
  det.start(ctx);
  auto timeout = ctx.take_timer(3);
  REQUIRE(timeout.has_value());
  det.on_timer(ctx, *timeout);
  CHECK(det.stats().registration_failures == 1);
  // A stale ack after the timeout is ignored.
  det.on_message(ctx, kAuth, from("authority", RegisterAck{}));
  CHECK_FALSE(det.registered());
}

TEST_CASE("incoming ping creates the peer link") {
  Detector det(detector_config());
  FakeContext ctx;
  det.on_message(ctx, NodeId("d9"), from("d9", Ping{}));
  CHECK(det.peers().contains(NodeId("d9")));
  CHECK(ctx.of(Kind::Pong).size() == 1);
}

TEST_CASE("remote EEW: alert once, relay to everyone but the sender") {
  Wired w;
  const auto msg = eew_from("d7", 1, kHere.offset_km(20, 0), 2);
  w.det.on_message(w.ctx, NodeId("d1"), from("d1", Eew{msg}));
  REQUIRE(w.alerts.size() == 1);
  CHECK(w.alerts[0].kind == AlertEvent::Kind::remote_gossip);
  const auto relays = w.ctx.of(Kind::Eew);
  REQUIRE(relays.size() == 2);
  for (const auto& [to, env] : relays) {
    CHECK(to != NodeId("d1"));
    CHECK(std::get<Eew>(env.payload).message.hop_count == 3);
  }
  w.det.on_message(w.ctx, NodeId("d2"), from("d2", Eew{msg}));
  CHECK(w.alerts.size() == 1);
  CHECK(w.det.stats().duplicates == 1);
  CHECK(w.ctx.of(Kind::Eew).size() == 2);
}

TEST_CASE("remote EEW from too far away alerts but is not relayed") {
  Wired w;
  w.det.on_message(w.ctx, NodeId("d1"), from("d1", Eew{eew_from("d7", 1, kHere.offset_km(150, 0))}));
  CHECK(w.alerts.size() == 1);
  CHECK(w.ctx.of(Kind::Eew).empty());
}

TEST_CASE("local detection originates, gossips and reports") {
  Wired w;
  detection::LocalAlert alert{{NodeId("p"), {}, 0, 2000}, 9.0, {NodeId("p")}};
  w.ctx.now_ms = 40000;
  auto msg = w.det.on_local_detection(w.ctx, alert);
  REQUIRE(msg.has_value());
  CHECK(msg->id == MessageId{NodeId("d0"), 1});
  CHECK(msg->hop_count == 0);
  CHECK(msg->origin_location == kHere);
  CHECK(w.ctx.of(Kind::Eew).size() == 3);
  CHECK(w.ctx.of(Kind::EewLog).size() == 1);
  REQUIRE(w.alerts.size() == 1);
  CHECK(w.alerts[0].kind == AlertEvent::Kind::local_detection);

  // Its own message coming back is a duplicate, not a new alert.
  w.det.on_message(w.ctx, NodeId("d1"), from("d1", Eew{msg->relayed()}));
  CHECK(w.alerts.size() == 1);

  w.ctx.now_ms = 69999;
  CHECK_FALSE(w.det.on_local_detection(w.ctx, alert).has_value());
  w.ctx.now_ms = 70000;
  auto next = w.det.on_local_detection(w.ctx, alert);
  REQUIRE(next.has_value());
  CHECK(next->id.seq == 2);
}

TEST_CASE("a fresh remote alert holds back local origination") {
  for (bool hold : {true, false}) {
    auto cfg = detector_config();
    cfg.suppress_after_remote = hold;
    Wired w(cfg);
    w.ctx.now_ms = 10000;
    w.det.on_message(w.ctx, NodeId("d1"), from("d1", Eew{eew_from("d7", 1, kHere)}));
    w.ctx.now_ms = 11000;
    detection::LocalAlert alert{{NodeId("p"), {}, 0, 2000}, 9.0, {NodeId("p")}};
    CHECK(w.det.on_local_detection(w.ctx, alert).has_value() == !hold);
  }
}

TEST_CASE("failed sends drop peers; authority loss does not stop gossip") {
  Wired w;
  w.ctx.unreachable = {NodeId("d2"), kAuth};
  detection::LocalAlert alert{{NodeId("p"), {}, 0, 2000}, 9.0, {NodeId("p")}};
  REQUIRE(w.det.on_local_detection(w.ctx, alert).has_value());
  CHECK(w.det.peers() == std::set<NodeId>{NodeId("d1"), NodeId("d3")});
  CHECK(w.det.stats().authority_report_failures == 1);
  CHECK(w.det.stats().peer_send_failures == 1);
  CHECK(w.ctx.of(Kind::Eew).size() == 3);
}

TEST_CASE("probe samples drive a local detection on tick") {
  Wired w;
  const NodeId probe("p0");
  w.det.on_message(w.ctx, probe, from("p0", ProbeHello{kHere}));
  sim::SyntheticSource src(5, 1e-3, {{probe, 4000, 9000, 0.05, 5.0}});
  TimeMs t = 0;
  for (TimeMs tick = 1000; tick <= 8000; tick += 1000) {
    SampleBatch batch;
    for (; t < tick; t += 10) batch.samples.push_back(src.sample(t));
    w.ctx.now_ms = tick;
    w.det.on_message(w.ctx, probe, from("p0", batch));
    w.det.on_timer(w.ctx, make_timer(1, 0));
  }
  REQUIRE(w.alerts.size() == 1);
  CHECK(w.alerts[0].kind == AlertEvent::Kind::local_detection);
  CHECK(w.alerts[0].message.signal_window.probe_id == probe);
  CHECK(w.alerts[0].raised_at_ms >= 4000);
  CHECK(w.det.stats().originated == 1);
}

TEST_CASE("a silent probe is dropped from the pipeline") {
  Wired w;
  w.det.on_message(w.ctx, NodeId("p0"), from("p0", ProbeHello{kHere}));
  CHECK(w.det.pipeline().has_probe(NodeId("p0")));
  w.ctx.now_ms = 5001;
  w.det.on_timer(w.ctx, make_timer(1, 0));
  CHECK_FALSE(w.det.pipeline().has_probe(NodeId("p0")));
  CHECK(w.det.stats().probes_timed_out == 1);
}

TEST_CASE("probe: query, connect, stream") {
  Probe p({.id = NodeId("p0"), .location = kHere, .authorities = {kAuth}}, std::make_unique<RestSource>());
  FakeContext ctx;
  ctx.now_ms = 1000;
  p.start(ctx);
  REQUIRE(ctx.of(Kind::ProbeQuery).size() == 1);
  p.on_message(ctx, kAuth, from("authority", ProbeAssign{NeighborEntry{NodeId("d3"), "", kHere}}));
  CHECK(p.assigned() == NodeId("d3"));
  CHECK(ctx.of(Kind::ProbeHello).size() == 1);
  for (int i = 0; i < 3; ++i) p.on_timer(ctx, *ctx.take_timer(1));
  const auto batches = ctx.of(Kind::SampleBatch);
  REQUIRE(batches.size() == 3);
  for (const auto& [to, env] : batches) {
    CHECK(to == NodeId("d3"));
    CHECK(std::get<SampleBatch>(env.payload).samples.size() == 20);
  }
  CHECK(std::get<SampleBatch>(batches[0].second.payload).samples.front().timestamp_ms == 1000);
  CHECK(std::get<SampleBatch>(batches[2].second.payload).samples.back().timestamp_ms == 1590);
  // Probes only ever talk to the authority and their detector.
  for (const auto& [to, env] : ctx.sent) CHECK((to == kAuth || to == NodeId("d3")));
}

TEST_CASE("probe: lost detector is excluded on the next query") {
  Probe p({.id = NodeId("p0"), .location = kHere, .authorities = {kAuth}}, std::make_unique<RestSource>());
  FakeContext ctx;
  p.start(ctx);
  p.on_message(ctx, kAuth, from("authority", ProbeAssign{NeighborEntry{NodeId("d3"), "", kHere}}));
  ctx.unreachable.insert(NodeId("d3"));
  p.on_timer(ctx, *ctx.take_timer(1));
  CHECK_FALSE(p.assigned().has_value());
  CHECK(p.stats().connection_losses == 1);
  const auto requery = ctx.take_timer(2);
  REQUIRE(requery.has_value());
  CHECK(ctx.now_ms == 200 + 5000);
  p.on_timer(ctx, *requery);
  const auto queries = ctx.of(Kind::ProbeQuery);
  REQUIRE(queries.size() == 2);
  CHECK(std::get<ProbeQuery>(queries[1].second.payload).exclude == std::vector<NodeId>{NodeId("d3")});
}

TEST_CASE("probe: no detector available backs off") {
  Probe p({.id = NodeId("p0"), .location = kHere, .authorities = {kAuth}}, std::make_unique<RestSource>());
  FakeContext ctx;
  p.start(ctx);
  p.on_message(ctx, kAuth, from("authority", ProbeAssign{}));
  CHECK(p.stats().unavailable == 1);
  CHECK(delays_of(ctx, 2, 0) == std::vector<TimeMs>{1000});
}

TEST_CASE("probe: falls back to its last detector while the authority is down") {
  Probe p({.id = NodeId("p0"), .location = kHere, .authorities = {kAuth}, .known_detector = NodeId("d5")},
          std::make_unique<RestSource>());
  FakeContext ctx;
  ctx.unreachable.insert(kAuth);
  p.start(ctx);
  CHECK(p.assigned() == NodeId("d5"));
  CHECK(p.stats().query_failures == 1);
}

TEST_CASE("probe: fixed detector reconnects after a loss") {
  Probe p({.id = NodeId("p0"), .location = kHere, .authorities = {kAuth}, .fixed_detector = NodeId("d0")},
          std::make_unique<RestSource>());
  FakeContext ctx;
  p.start(ctx);
  CHECK(ctx.of(Kind::ProbeQuery).empty());
  CHECK(p.assigned() == NodeId("d0"));
  ctx.unreachable.insert(NodeId("d0"));
  p.on_timer(ctx, *ctx.take_timer(1));
  CHECK_FALSE(p.assigned().has_value());
  ctx.unreachable.clear();
  p.on_timer(ctx, *ctx.take_timer(4));
  CHECK(p.assigned() == NodeId("d0"));
}
