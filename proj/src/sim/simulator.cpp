// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/sim/simulator.hpp"

#include <algorithm>
#include <random>

#include "quakemesh/sim/synthetic.hpp"

namespace quakemesh::sim {

using protocol::Envelope;
using protocol::Kind;

class Simulator::Context final : public node::NodeContext {
 public:
  Context(Simulator& sim, NodeId self) : sim_(sim), self_(std::move(self)) {}

  TimeMs now() const override { return sim_.now_; }
  bool send(const NodeId& to, const Envelope& env) override { return sim_.transmit(self_, to, env); }
  void set_timer(TimeMs delay_ms, std::uint64_t timer_id) override {
    const auto& slot = sim_.slots_.at(self_);
    sim_.schedule(sim_.now_ + std::max<TimeMs>(0, delay_ms), Timer{self_, slot.epoch, timer_id});
  }

 private:
  Simulator& sim_;
  NodeId self_;
};

Simulator::Simulator(Scenario scenario, std::uint64_t seed) : scenario_(std::move(scenario)), seed_(seed) {
  for (const auto& id : scenario_.authority.replicas) slots_[id] = Slot{node::Role::authority, nullptr, false, 0, {}};
  for (const auto& d : scenario_.detectors) slots_[d.id] = Slot{node::Role::detector, nullptr, false, 0, d.location};
  for (const auto& p : scenario_.probes) slots_[p.id] = Slot{node::Role::probe, nullptr, false, 0, p.location};

  for (const auto& q : scenario_.quakes)
    for (auto& b : inject_quake(q, scenario_.probes)) bursts_[b.probe].push_back(b);

  for (const auto& id : scenario_.authority.replicas) schedule(0, Boot{id});
  for (const auto& d : scenario_.detectors) schedule(d.boot_ms, Boot{d.id});
  for (const auto& p : scenario_.probes) schedule(p.boot_ms, Boot{p.id});
  for (std::size_t i = 0; i < scenario_.faults.size(); ++i) schedule(scenario_.faults[i].at_ms, Fault{i});
  if (scenario_.authority.replicas.size() > 1) schedule(scenario_.authority.replication_interval_ms, Replicate{});

  report_.scenario = scenario_.name;
  report_.seed = seed_;
  report_.duration_ms = scenario_.duration_ms;
  report_.max_distance_km = scenario_.gossip.max_distance_km;
  report_.max_hops = scenario_.gossip.max_hops;
}

void Simulator::schedule(TimeMs at, Payload p) { queue_.push(Event{at, next_seq_++, std::move(p)}); }

bool Simulator::is_up(const NodeId& id) const {
  auto it = slots_.find(id);
  return it != slots_.end() && it->second.up;
}

const node::Detector* Simulator::detector(const NodeId& id) const {
  auto it = slots_.find(id);
  if (it == slots_.end() || !it->second.up) return nullptr;
  return dynamic_cast<const node::Detector*>(it->second.actor.get());
}

const node::Probe* Simulator::probe(const NodeId& id) const {
  auto it = slots_.find(id);
  if (it == slots_.end() || !it->second.up) return nullptr;
  return dynamic_cast<const node::Probe*>(it->second.actor.get());
}

const node::AuthorityNode* Simulator::authority(const NodeId& id) const {
  auto it = slots_.find(id);
  if (it == slots_.end()) return nullptr;
  return dynamic_cast<const node::AuthorityNode*>(it->second.actor.get());
}

bool Simulator::link_up(const NodeId& a, const NodeId& b) const {
  if ((partition_a_.contains(a) && partition_b_.contains(b)) || (partition_a_.contains(b) && partition_b_.contains(a)))
    return false;
  return link_spec(a, b).up;
}

LinkSpec Simulator::link_spec(const NodeId& a, const NodeId& b) const {
  const auto key = a < b ? std::pair{a, b} : std::pair{b, a};
  if (auto it = scenario_.network.overrides.find(key); it != scenario_.network.overrides.end()) return it->second;
  auto role = [&](const NodeId& id) {
    auto it = slots_.find(id);
    return it == slots_.end() ? node::Role::detector : it->second.role;
  };
  const auto ra = role(a), rb = role(b);
  if (ra == node::Role::authority || rb == node::Role::authority) return scenario_.network.authority_link;
  if (ra == node::Role::probe || rb == node::Role::probe) return scenario_.network.probe_link;
  return scenario_.network.detector_link;
}

bool Simulator::lose(const NodeId& a, const NodeId& b, double p) {
  if (p <= 0.0) return false;
  auto it = link_rng_.find({a, b});
  if (it == link_rng_.end())
    it = link_rng_.emplace(std::pair{a, b}, std::mt19937_64(derive_seed(seed_, "link:" + a.str() + ">" + b.str())))
             .first;
  return std::uniform_real_distribution<double>(0.0, 1.0)(it->second) < p;
}

bool Simulator::transmit(const NodeId& from, const NodeId& to, const Envelope& env) {
  auto encoded = protocol::encode(env);
  if (!encoded) return false;

  Transmission t{.time_ms = now_, .from = from, .to = to};
  t.from_role = slots_.at(from).role;
  t.kind = env.kind();
  t.bytes = encoded->size();
  if (const auto* e = std::get_if<protocol::Eew>(&env.payload)) {
    t.message_id = e->message.id.str();
    t.hops = e->message.hop_count;
    if (const auto& loc = slots_.at(from).location)
      t.sender_distance_km = haversine_distance(*loc, e->message.origin_location);
  } else if (const auto* l = std::get_if<protocol::EewLog>(&env.payload)) {
    t.message_id = l->message.id.str();
    t.hops = l->message.hop_count;
  }

  auto dest = slots_.find(to);
  if (dest != slots_.end()) t.to_role = dest->second.role;
  const bool reachable = dest != slots_.end() && dest->second.up && link_up(from, to);
  const std::size_t index = report_.transmissions.size();
  if (!reachable) {
    t.outcome = Transmission::Outcome::failed;
    report_.transmissions.push_back(std::move(t));
    return false;
  }
  const auto spec = link_spec(from, to);
  if (lose(from, to, spec.loss_probability)) {
    t.outcome = Transmission::Outcome::lost;
    report_.transmissions.push_back(std::move(t));
    return true;
  }
  report_.transmissions.push_back(std::move(t));
  schedule(now_ + spec.latency_ms, Deliver{from, to, dest->second.epoch, std::move(*encoded), index});
  return true;
}

std::unique_ptr<node::Actor> Simulator::make_actor(const NodeId& id) {
  const auto& slot = slots_.at(id);
  switch (slot.role) {
    case node::Role::authority:
      return std::make_unique<node::AuthorityNode>(id, authority::ServiceConfig{scenario_.authority.k,
                                                                                 scenario_.authority.ttl_ms});
    case node::Role::detector: {
      node::DetectorConfig cfg{.id = id,
                               .location = *slot.location,
                               .endpoint = "sim://" + id.str(),
                               .authorities = scenario_.authority.replicas,
                               .params = scenario_.detection,
                               .quorum = scenario_.quorum,
                               .gossip = scenario_.gossip,
                               .reregister_interval_ms = scenario_.authority.reregister_ms,
                               .lease_ttl_ms = scenario_.authority.ttl_ms,
                               .suppress_after_remote = scenario_.suppress_after_remote};
      node::AlertSink alerts = [this](const node::AlertEvent& a) { on_alert(a); };
      node::ResultSink results = [this](const NodeId&, const detection::DetectionResult& r, double threshold) {
        ++report_.metrics.detection_results;
        if (r.triggered != (r.score > threshold)) ++report_.threshold_inconsistencies;
      };
      if (detector_factory_) return detector_factory_(std::move(cfg), std::move(alerts), std::move(results));
      return std::make_unique<node::Detector>(std::move(cfg), std::move(alerts), std::move(results));
    }
    case node::Role::probe: {
      const auto spec = std::find_if(scenario_.probes.begin(), scenario_.probes.end(),
                                     [&](const ProbeSpec& p) { return p.id == id; });
      node::ProbeConfig cfg{.id = id,
                            .location = spec->location,
                            .authorities = scenario_.authority.replicas,
                            .fixed_detector = spec->fixed_detector,
                            .sample_rate_hz = scenario_.detection.sample_rate_hz};
      auto it = bursts_.find(id);
      auto source = std::make_unique<SyntheticSource>(
          derive_seed(seed_, "probe:" + id.str() + "#" + std::to_string(slot.epoch)), scenario_.noise_floor_g,
          it == bursts_.end() ? std::vector<BurstSchedule>{} : it->second);
      return std::make_unique<node::Probe>(std::move(cfg), std::move(source));
    }
  }
  return nullptr;
}

void Simulator::boot(const NodeId& id) {
  auto& slot = slots_.at(id);
  if (slot.up) return;
  ++slot.epoch;
  slot.actor = make_actor(id);
  slot.up = true;
  Context ctx(*this, id);
  slot.actor->start(ctx);
}

void Simulator::harvest(const Slot& slot) {
  if (const auto* d = dynamic_cast<const node::Detector*>(slot.actor.get())) {
    authority_report_failures_[d->id()] += d->stats().authority_report_failures;
    duplicate_deliveries_ += d->stats().duplicates;
  }
}

std::optional<FaultError> Simulator::apply_fault(const FaultAction& f) {
  using T = FaultAction::Type;
  auto target = [&]() -> Slot* {
    if (!f.node) return nullptr;
    auto it = slots_.find(*f.node);
    return it == slots_.end() ? nullptr : &it->second;
  };
  switch (f.type) {
    case T::crash_node: {
      Slot* s = target();
      if (!s) return FaultError::UnknownNode;
      if (!s->up) return std::nullopt;
      harvest(*s);
      s->up = false;
      ++s->epoch;
      s->actor.reset();
      return std::nullopt;
    }
    case T::revive_node: {
      Slot* s = target();
      if (!s) return FaultError::UnknownNode;
      if (s->up) return std::nullopt;
      if (s->role == node::Role::authority && s->actor) {
        // Only a replica taken down by authority_down keeps its state.
        s->up = true;
        ++s->epoch;
        Context ctx(*this, *f.node);
        s->actor->start(ctx);
      } else {
        boot(*f.node);
      }
      return std::nullopt;
    }
    case T::partition:
      for (const auto* side : {&f.side_a, &f.side_b})
        for (const auto& id : *side)
          if (!slots_.contains(id)) return FaultError::UnknownNode;
      partition_a_ = {f.side_a.begin(), f.side_a.end()};
      partition_b_ = {f.side_b.begin(), f.side_b.end()};
      return std::nullopt;
    case T::heal_partition:
      partition_a_.clear();
      partition_b_.clear();
      return std::nullopt;
    case T::authority_down:
    case T::authority_up: {
      std::vector<NodeId> targets;
      if (f.node) {
        Slot* s = target();
        if (!s || s->role != node::Role::authority) return FaultError::UnknownNode;
        targets.push_back(*f.node);
      } else {
        targets = scenario_.authority.replicas;
      }
      for (const auto& id : targets) {
        auto& s = slots_.at(id);
        if (f.type == T::authority_down) {
          if (!s.up) continue;
          s.up = false;
          ++s.epoch;
        } else if (!s.up) {
          if (!s.actor) {
            boot(id);
            continue;
          }
          s.up = true;
          ++s.epoch;
          Context ctx(*this, id);
          s.actor->start(ctx);
        }
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

void Simulator::replicate() {
  const auto& ids = scenario_.authority.replicas;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      auto& a = slots_.at(ids[i]);
      auto& b = slots_.at(ids[j]);
      if (!a.up || !b.up || !link_up(ids[i], ids[j])) continue;
      auto& ra = static_cast<node::AuthorityNode&>(*a.actor).service().registry();
      auto& rb = static_cast<node::AuthorityNode&>(*b.actor).service().registry();
      const auto sa = ra.snapshot();
      ra.replicate(rb.snapshot());
      rb.replicate(sa);
    }
  }
}

void Simulator::on_alert(const node::AlertEvent& a) {
  const bool local = a.kind == node::AlertEvent::Kind::local_detection;
  report_.alerts.push_back(AlertRecord{a.node, a.message.id.str(), a.message.id.origin,
                                       std::string(node::to_string(a.kind)), a.raised_at_ms, a.message.hop_count});
  if (!local) return;
  OriginRecord o{a.message.id.str(), a.message.id.origin, a.message.origin_location, a.raised_at_ms, {}, {}};
  for (const auto& [id, slot] : slots_) {
    if (!slot.up || slot.role != node::Role::detector) continue;
    o.live_detectors.push_back(id);
    const auto* d = dynamic_cast<const node::Detector*>(slot.actor.get());
    auto& edges = o.topology[id];
    // The originator is mid-callback; its peer set is final for this message.
    if (d)
      for (const auto& peer : d->peers()) edges[peer] = link_spec(id, peer).latency_ms;
  }
  report_.origins.push_back(std::move(o));
}

void Simulator::dispatch(const Event& e) {
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Deliver>) {
          auto& t = report_.transmissions[p.trace_index];
          auto& slot = slots_.at(p.to);
          if (!slot.up || slot.epoch != p.epoch || !link_up(p.from, p.to)) {
            t.outcome = Transmission::Outcome::dropped_in_flight;
            return;
          }
          t.outcome = Transmission::Outcome::delivered;
          t.delivered_at_ms = now_;
          auto env = protocol::decode(p.bytes);
          if (!env) {
            ++malformed_;
            return;
          }
          Context ctx(*this, p.to);
          slot.actor->on_message(ctx, p.from, *env);
        } else if constexpr (std::is_same_v<P, Timer>) {
          auto& slot = slots_.at(p.node);
          if (!slot.up || slot.epoch != p.epoch) return;
          Context ctx(*this, p.node);
          slot.actor->on_timer(ctx, p.id);
        } else if constexpr (std::is_same_v<P, Boot>) {
          boot(p.node);
        } else if constexpr (std::is_same_v<P, Fault>) {
          apply_fault(scenario_.faults[p.index]);
        } else {
          replicate();
          schedule(now_ + scenario_.authority.replication_interval_ms, Replicate{});
        }
      },
      e.payload);
}

void Simulator::advance_to(TimeMs t_ms) {
  while (!queue_.empty() && queue_.top().at <= t_ms) {
    Event e = queue_.top();
    queue_.pop();
    now_ = e.at;
    dispatch(e);
  }
  now_ = std::max(now_, t_ms);
}

SimReport Simulator::run() {
  advance_to(scenario_.duration_ms);
  SimReport out = report_;
  finalize(out);
  return out;
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

void Simulator::finalize(SimReport& r) {
  auto& m = r.metrics;
  std::size_t duplicates = duplicate_deliveries_;
  std::map<NodeId, std::size_t> report_failures = authority_report_failures_;
  std::set<NodeId> alerted;
  for (const auto& a : r.alerts) alerted.insert(a.node);

  m.detectors_total = scenario_.detectors.size();
  m.detectors_live = m.detectors_alerted = 0;
  for (const auto& [id, slot] : slots_) {
    if (slot.role != node::Role::detector || !slot.up) continue;
    ++m.detectors_live;
    if (alerted.contains(id)) ++m.detectors_alerted;
    if (const auto* d = dynamic_cast<const node::Detector*>(slot.actor.get())) {
      duplicates += d->stats().duplicates;
      report_failures[id] += d->stats().authority_report_failures;
    }
  }
  m.coverage = m.detectors_live ? static_cast<double>(m.detectors_alerted) / m.detectors_live : 0.0;

  m.eew_messages = r.origins.size();
  std::set<NodeId> origin_nodes;
  std::map<std::string, TimeMs> origin_time;
  for (const auto& o : r.origins) {
    origin_nodes.insert(o.origin);
    origin_time[o.message_id] = o.time_ms;
  }
  m.distinct_origins = origin_nodes.size();

  std::vector<double> latencies;
  m.local_alerts = m.remote_alerts = 0;
  for (const auto& a : r.alerts) {
    if (a.kind == "local_detection") {
      ++m.local_alerts;
      continue;
    }
    ++m.remote_alerts;
    if (auto it = origin_time.find(a.message_id); it != origin_time.end())
      latencies.push_back(static_cast<double>(a.time_ms - it->second));
  }
  m.latency_median_ms = percentile(latencies, 50.0);
  m.latency_p95_ms = percentile(latencies, 95.0);
  m.duplicate_deliveries = duplicates;

  m.transmissions = r.transmissions.size();
  m.bytes = m.failed_sends = m.lost_messages = 0;
  m.transmissions_by_kind.clear();
  for (const auto& t : r.transmissions) {
    m.bytes += t.bytes;
    if (t.outcome == Transmission::Outcome::failed) ++m.failed_sends;
    if (t.outcome == Transmission::Outcome::lost) ++m.lost_messages;
    ++m.transmissions_by_kind[std::string(protocol::to_string(t.kind))];
  }

  std::optional<authority::RegistrySnapshot> merged;
  for (const auto& id : scenario_.authority.replicas) {
    const auto* a = authority(id);
    if (!a) continue;
    auto snap = a->service().registry().snapshot();
    merged = merged ? authority::merge(*merged, snap) : std::move(snap);
  }
  m.authority_log_entries = merged ? merged->log.size() : 0;
  m.authority_report_failures = 0;
  for (const auto& [id, n] : report_failures) m.authority_report_failures += n;

  r.trace_digest = fnv1a(0xcbf29ce484222325ull, trace_lines(r));
  r.audit = audit(r);
}

Expected<SimReport, InvalidScenario> run_scenario(const Scenario& scenario, std::uint64_t seed) {
  if (auto diags = validate(scenario); !diags.empty()) return unexpected(InvalidScenario{std::move(diags)});
  Simulator sim(scenario, seed);
  return sim.run();
}

}  // namespace quakemesh::sim
