// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/sim/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <tuple>

#include "json.hpp"

namespace quakemesh::sim {

using json = nlohmann::ordered_json;

std::string_view to_string(Transmission::Outcome o) noexcept {
  switch (o) {
    case Transmission::Outcome::delivered: return "delivered";
    case Transmission::Outcome::lost: return "lost";
    case Transmission::Outcome::failed: return "failed";
    case Transmission::Outcome::dropped_in_flight: return "dropped_in_flight";
    case Transmission::Outcome::in_flight: return "in_flight";
  }
  return "?";
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

namespace {

constexpr double kDistanceSlackKm = 1e-9;

std::map<NodeId, TimeMs> shortest_paths(const std::map<NodeId, std::map<NodeId, TimeMs>>& graph, const NodeId& src) {
  std::map<NodeId, TimeMs> dist{{src, 0}};
  using Item = std::pair<TimeMs, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.push({0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    auto it = graph.find(u);
    if (it == graph.end()) continue;
    for (const auto& [v, w] : it->second) {
      auto cur = dist.find(v);
      if (cur == dist.end() || d + w < cur->second) {
        dist[v] = d + w;
        pq.push({d + w, v});
      }
    }
  }
  return dist;
}

}  // namespace

AuditResult audit(const SimReport& r) {
  AuditResult a;
  a.threshold_inconsistencies = r.threshold_inconsistencies;

  // Raw samples only ever travel probe -> detector.
  for (const auto& t : r.transmissions)
    if (t.kind == protocol::Kind::SampleBatch &&
        !(t.from_role == node::Role::probe && t.to_role == node::Role::detector))
      ++a.privacy_violations;

  std::set<std::pair<NodeId, std::string>> alerted;
  for (const auto& al : r.alerts)
    if (!alerted.insert({al.node, al.message_id}).second) ++a.duplicate_alerts;

  // First copy of each message that reached each node, by delivery time.
  std::map<std::pair<NodeId, std::string>, std::pair<TimeMs, std::uint32_t>> first_rx;
  std::map<std::string, std::map<NodeId, std::map<NodeId, TimeMs>>> observed;
  std::set<std::tuple<NodeId, std::string, NodeId>> sent;
  for (const auto& t : r.transmissions) {
    if (t.kind != protocol::Kind::Eew) continue;
    if (!sent.insert({t.from, t.message_id, t.to}).second) ++a.duplicate_relays;
    if (t.hops && *t.hops > r.max_hops) ++a.hop_limit_violations;
    if (t.hops && *t.hops >= 1 && t.sender_distance_km && *t.sender_distance_km > r.max_distance_km + kDistanceSlackKm)
      ++a.out_of_range_relays;
    if (t.outcome == Transmission::Outcome::delivered && t.delivered_at_ms) {
      const auto key = std::pair{t.to, t.message_id};
      auto it = first_rx.find(key);
      if (it == first_rx.end() || *t.delivered_at_ms < it->second.first)
        first_rx[key] = {*t.delivered_at_ms, t.hops.value_or(0)};
      auto& edge = observed[t.message_id][t.from];
      const TimeMs lat = *t.delivered_at_ms - t.time_ms;
      if (auto e = edge.find(t.to); e == edge.end() || lat < e->second) edge[t.to] = lat;
    }
  }

  std::map<std::string, NodeId> origin_of;
  for (const auto& o : r.origins) origin_of.emplace(o.message_id, o.origin);
  for (const auto& t : r.transmissions) {
    if (t.kind != protocol::Kind::Eew || !t.hops) continue;
    auto origin = origin_of.find(t.message_id);
    if (origin != origin_of.end() && origin->second == t.from) {
      if (*t.hops != 0) ++a.hop_increment_violations;
      continue;
    }
    auto rx = first_rx.find({t.from, t.message_id});
    if (rx == first_rx.end() || rx->second.second + 1 != *t.hops) ++a.hop_increment_violations;
  }

  // No alert may precede the fastest path the message could have taken.
  for (const auto& o : r.origins) {
    auto graph = o.topology;
    if (auto it = observed.find(o.message_id); it != observed.end())
      for (const auto& [u, edges] : it->second)
        for (const auto& [v, w] : edges) {
          auto& cur = graph[u];
          if (auto e = cur.find(v); e == cur.end() || w < e->second) cur[v] = w;
        }
    const auto dist = shortest_paths(graph, o.origin);
    for (const auto& al : r.alerts) {
      if (al.message_id != o.message_id || al.kind == "local_detection") continue;
      auto d = dist.find(al.node);
      if (d == dist.end() || al.time_ms < o.time_ms + d->second) ++a.latency_bound_violations;
    }
  }
  return a;
}

namespace {

json metrics_json(const Metrics& m) {
  json by_kind = json::object();
  for (const auto& [k, v] : m.transmissions_by_kind) by_kind[k] = v;
  return json{{"detectors_total", m.detectors_total},
              {"detectors_live", m.detectors_live},
              {"detectors_alerted", m.detectors_alerted},
              {"coverage", m.coverage},
              {"eew_messages", m.eew_messages},
              {"distinct_origins", m.distinct_origins},
              {"local_alerts", m.local_alerts},
              {"remote_alerts", m.remote_alerts},
              {"latency_median_ms", m.latency_median_ms},
              {"latency_p95_ms", m.latency_p95_ms},
              {"duplicate_deliveries", m.duplicate_deliveries},
              {"transmissions", m.transmissions},
              {"bytes", m.bytes},
              {"failed_sends", m.failed_sends},
              {"lost_messages", m.lost_messages},
              {"authority_log_entries", m.authority_log_entries},
              {"authority_report_failures", m.authority_report_failures},
              {"detection_results", m.detection_results},
              {"transmissions_by_kind", by_kind}};
}

json audit_json(const AuditResult& a) {
  return json{{"passed", a.passed()},
              {"privacy_violations", a.privacy_violations},
              {"duplicate_alerts", a.duplicate_alerts},
              {"duplicate_relays", a.duplicate_relays},
              {"out_of_range_relays", a.out_of_range_relays},
              {"hop_limit_violations", a.hop_limit_violations},
              {"hop_increment_violations", a.hop_increment_violations},
              {"latency_bound_violations", a.latency_bound_violations},
              {"threshold_inconsistencies", a.threshold_inconsistencies}};
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

}  // namespace

std::string to_text(const SimReport& r) {
  json alerts = json::array();
  for (const auto& a : r.alerts)
    alerts.push_back({{"node", a.node.str()},
                      {"message_id", a.message_id},
                      {"origin", a.origin.str()},
                      {"kind", a.kind},
                      {"time_ms", a.time_ms},
                      {"hops", a.hop_count}});
  json origins = json::array();
  for (const auto& o : r.origins) {
    json topo = json::object();
    for (const auto& [u, edges] : o.topology) {
      json e = json::object();
      for (const auto& [v, w] : edges) e[v.str()] = w;
      topo[u.str()] = e;
    }
    json live = json::array();
    for (const auto& id : o.live_detectors) live.push_back(id.str());
    origins.push_back({{"message_id", o.message_id},
                       {"origin", o.origin.str()},
                       {"location", {o.origin_location.latitude_deg(), o.origin_location.longitude_deg()}},
                       {"time_ms", o.time_ms},
                       {"live_detectors", live},
                       {"topology", topo}});
  }
  json doc{{"schema", "quakemesh-report/1"},
           {"scenario", r.scenario},
           {"seed", r.seed},
           {"duration_ms", r.duration_ms},
           {"max_distance_km", r.max_distance_km},
           {"max_hops", r.max_hops},
           {"trace_digest", hex64(r.trace_digest)},
           {"threshold_inconsistencies", r.threshold_inconsistencies},
           {"metrics", metrics_json(r.metrics)},
           {"audit", audit_json(r.audit)},
           {"alerts", alerts},
           {"origins", origins}};
  return doc.dump(2) + "\n";
}

Expected<SimReport, std::string> from_text(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return unexpected(std::string("not a JSON object"));
  try {
    if (doc.at("schema") != "quakemesh-report/1") return unexpected(std::string("unsupported schema"));
    SimReport r;
    r.scenario = doc.at("scenario").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.duration_ms = doc.at("duration_ms").get<TimeMs>();
    r.max_distance_km = doc.at("max_distance_km").get<double>();
    r.max_hops = doc.at("max_hops").get<std::uint32_t>();
    r.trace_digest = std::stoull(doc.at("trace_digest").get<std::string>(), nullptr, 16);
    r.threshold_inconsistencies = doc.at("threshold_inconsistencies").get<std::size_t>();

    const auto& m = doc.at("metrics");
    auto& x = r.metrics;
    x.detectors_total = m.at("detectors_total");
    x.detectors_live = m.at("detectors_live");
    x.detectors_alerted = m.at("detectors_alerted");
    x.coverage = m.at("coverage");
    x.eew_messages = m.at("eew_messages");
    x.distinct_origins = m.at("distinct_origins");
    x.local_alerts = m.at("local_alerts");
    x.remote_alerts = m.at("remote_alerts");
    x.latency_median_ms = m.at("latency_median_ms");
    x.latency_p95_ms = m.at("latency_p95_ms");
    x.duplicate_deliveries = m.at("duplicate_deliveries");
    x.transmissions = m.at("transmissions");
    x.bytes = m.at("bytes");
    x.failed_sends = m.at("failed_sends");
    x.lost_messages = m.at("lost_messages");
    x.authority_log_entries = m.at("authority_log_entries");
    x.authority_report_failures = m.at("authority_report_failures");
    x.detection_results = m.at("detection_results");
    for (const auto& [k, v] : m.at("transmissions_by_kind").items()) x.transmissions_by_kind[k] = v;

    const auto& a = doc.at("audit");
    r.audit.privacy_violations = a.at("privacy_violations");
    r.audit.duplicate_alerts = a.at("duplicate_alerts");
    r.audit.duplicate_relays = a.at("duplicate_relays");
    r.audit.out_of_range_relays = a.at("out_of_range_relays");
    r.audit.hop_limit_violations = a.at("hop_limit_violations");
    r.audit.hop_increment_violations = a.at("hop_increment_violations");
    r.audit.latency_bound_violations = a.at("latency_bound_violations");
    r.audit.threshold_inconsistencies = a.at("threshold_inconsistencies");

    for (const auto& j : doc.at("alerts"))
      r.alerts.push_back(AlertRecord{NodeId(j.at("node").get<std::string>()), j.at("message_id"),
                                     NodeId(j.at("origin").get<std::string>()), j.at("kind"), j.at("time_ms"),
                                     j.at("hops")});
    for (const auto& j : doc.at("origins")) {
      OriginRecord o{j.at("message_id"), NodeId(j.at("origin").get<std::string>()),
                     GeoLocation(j.at("location").at(0).get<double>(), j.at("location").at(1).get<double>()),
                     j.at("time_ms"), {}, {}};
      for (const auto& id : j.at("live_detectors")) o.live_detectors.emplace_back(id.get<std::string>());
      for (const auto& [u, edges] : j.at("topology").items()) {
        auto& out = o.topology[NodeId(u)];
        for (const auto& [v, w] : edges.items()) out[NodeId(v)] = w.get<TimeMs>();
      }
      r.origins.push_back(std::move(o));
    }
    return r;
  } catch (const std::exception& e) {
    return unexpected(std::string(e.what()));
  }
}

std::string trace_lines(const SimReport& r) {
  std::string out;
  for (const auto& t : r.transmissions) {
    json j{{"t", t.time_ms},
           {"from", t.from.str()},
           {"to", t.to.str()},
           {"kind", protocol::to_string(t.kind)},
           {"bytes", t.bytes},
           {"outcome", to_string(t.outcome)}};
    if (!t.message_id.empty()) j["message_id"] = t.message_id;
    if (t.hops) j["hops"] = *t.hops;
    if (t.delivered_at_ms) j["delivered_at"] = *t.delivered_at_ms;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace quakemesh::sim
