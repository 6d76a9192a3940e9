// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/node/detector.hpp"

#include <variant>

namespace quakemesh::node {

using namespace quakemesh::protocol;

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::probe: return "probe";
    case Role::detector: return "detector";
    case Role::authority: return "authority";
  }
  return "?";
}

std::string_view to_string(AlertEvent::Kind k) noexcept {
  return k == AlertEvent::Kind::local_detection ? "local_detection" : "remote_gossip";
}

Detector::Detector(DetectorConfig cfg, AlertSink alerts, ResultSink results)
    : cfg_(std::move(cfg)),
      alert_sink_(std::move(alerts)),
      result_sink_(std::move(results)),
      pipeline_(cfg_.params, cfg_.quorum),
      seen_(cfg_.gossip.dedup_capacity),
      backoff_(cfg_.backoff_base_ms, cfg_.backoff_cap_ms) {}

void Detector::start(NodeContext& ctx) {
  ctx.set_timer(cfg_.params.slide_ms, make_timer(kTick, 0));
  attempt_register(ctx);
}

bool Detector::send(NodeContext& ctx, const NodeId& to, Payload payload) {
  return ctx.send(to, Envelope{cfg_.id, ++envelope_seq_, std::move(payload)});
}

std::size_t Detector::broadcast(NodeContext& ctx, const Payload& payload, const std::optional<NodeId>& skip,
                                std::size_t* failures) {
  std::size_t sent = 0;
  std::vector<NodeId> lost;
  for (const auto& peer : peers_) {
    if (skip && peer == *skip) continue;
    if (send(ctx, peer, payload)) {
      ++sent;
    } else {
      lost.push_back(peer);
      ++stats_.peer_send_failures;
      if (failures) ++*failures;
    }
  }
  // A failed link is gone; the next registration round may bring it back.
  for (const auto& p : lost) peers_.erase(p);
  return sent;
}

void Detector::attempt_register(NodeContext& ctx) {
  const Register reg{cfg_.location, cfg_.endpoint, cfg_.lease_ttl_ms, ctx.now()};
  for (const auto& auth : cfg_.authorities) {
    if (send(ctx, auth, reg)) {
      awaiting_ack_ = true;
      ctx.set_timer(cfg_.register_timeout_ms, make_timer(kRegisterTimeout, ++register_generation_));
      return;
    }
  }
  ++stats_.registration_failures;
  schedule_register_retry(ctx);
}

void Detector::schedule_register_retry(NodeContext& ctx) {
  awaiting_ack_ = false;
  ctx.set_timer(backoff_.next(), make_timer(kRegister, ++register_generation_));
}

void Detector::on_register_ack(NodeContext& ctx, const RegisterAck& ack) {
  if (!awaiting_ack_) return;
  awaiting_ack_ = false;
  registered_ = true;
  ++stats_.registrations;
  backoff_.reset();
  for (const auto& n : ack.neighbors) {
    if (n.node_id == cfg_.id || peers_.contains(n.node_id)) continue;
    if (send(ctx, n.node_id, Ping{})) peers_.insert(n.node_id);
  }
  ctx.set_timer(cfg_.reregister_interval_ms, make_timer(kRegister, ++register_generation_));
}

void Detector::on_message(NodeContext& ctx, const NodeId& from, const Envelope& env) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RegisterAck>) {
          on_register_ack(ctx, p);
        } else if constexpr (std::is_same_v<T, Ping>) {
          peers_.insert(from);
          send(ctx, from, Pong{});
        } else if constexpr (std::is_same_v<T, ProbeHello>) {
          pipeline_.add_probe(from);
          probe_last_seen_[from] = ctx.now();
        } else if constexpr (std::is_same_v<T, SampleBatch>) {
          const auto pushed = pipeline_.push(from, p.samples);
          stats_.samples_rejected += pushed.rejected;
          probe_last_seen_[from] = ctx.now();
        } else if constexpr (std::is_same_v<T, Eew>) {
          on_remote_eew(ctx, from, p.message);
        }
      },
      env.payload);
}

void Detector::on_timer(NodeContext& ctx, std::uint64_t timer_id) {
  switch (timer_kind(timer_id)) {
    case kTick:
      on_tick(ctx);
      ctx.set_timer(cfg_.params.slide_ms, make_timer(kTick, 0));
      break;
    case kRegister:
      if (timer_generation(timer_id) == register_generation_) attempt_register(ctx);
      break;
    case kRegisterTimeout:
      if (awaiting_ack_ && timer_generation(timer_id) == register_generation_) {
        ++stats_.registration_failures;
        schedule_register_retry(ctx);
      }
      break;
    default: break;
  }
}

void Detector::on_tick(NodeContext& ctx) {
  const TimeMs now = ctx.now();
  for (auto it = probe_last_seen_.begin(); it != probe_last_seen_.end();) {
    if (now - it->second > cfg_.probe_timeout_ms) {
      pipeline_.remove_probe(it->first);
      ++stats_.probes_timed_out;
      it = probe_last_seen_.erase(it);
    } else {
      ++it;
    }
  }
  auto report = pipeline_.tick(now);
  stats_.windows_evaluated += report.results.size();
  stats_.windows_skipped += report.insufficient + report.degenerate;
  if (result_sink_) {
    const double threshold =
        cfg_.params.algorithm == detection::Algorithm::zscore ? cfg_.params.threshold_z : cfg_.params.threshold_ratio;
    for (const auto& r : report.results) result_sink_(cfg_.id, r, threshold);
  }
  if (report.alert) on_local_detection(ctx, *report.alert);
}

void Detector::raise(const EEWMessage& msg, AlertEvent::Kind kind, TimeMs now) {
  last_alert_ms_ = now;
  alerts_.push_back({cfg_.id, msg, kind, now});
  if (alert_sink_) alert_sink_(alerts_.back());
}

bool Detector::report_to_authority(NodeContext& ctx, const EEWMessage& msg) {
  for (const auto& auth : cfg_.authorities)
    if (send(ctx, auth, EewLog{msg, ctx.now()})) return true;
  ++stats_.authority_report_failures;
  return false;
}

std::optional<EEWMessage> Detector::on_local_detection(NodeContext& ctx, const detection::LocalAlert& alert) {
  const TimeMs now = ctx.now();
  const auto fresh = [&](const std::optional<TimeMs>& t) { return t && now - *t < cfg_.origination_suppress_ms; };
  if (fresh(last_origination_ms_) || (cfg_.suppress_after_remote && fresh(last_alert_ms_))) {
    ++stats_.suppressed;
    return std::nullopt;
  }
  EEWMessage msg{MessageId{cfg_.id, ++eew_seq_}, now, cfg_.location, alert.window, 0};
  seen_.insert(msg.id);
  last_origination_ms_ = now;
  ++stats_.originated;
  raise(msg, AlertEvent::Kind::local_detection, now);
  broadcast(ctx, Eew{msg}, std::nullopt, nullptr);
  report_to_authority(ctx, msg);
  return msg;
}

void Detector::on_remote_eew(NodeContext& ctx, const NodeId& from, const EEWMessage& msg) {
  if (seen_.contains(msg.id)) {
    ++stats_.duplicates;
    return;
  }
  raise(msg, AlertEvent::Kind::remote_gossip, ctx.now());
  if (!should_forward(msg, cfg_.location, seen_, cfg_.gossip)) return;
  stats_.relayed += broadcast(ctx, Eew{msg.relayed()}, from, nullptr);
}

}  // namespace quakemesh::node
