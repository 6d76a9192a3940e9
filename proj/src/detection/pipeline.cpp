// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/detection/pipeline.hpp"

#include <algorithm>
#include <set>

namespace quakemesh::detection {

std::string_view to_string(QuorumPolicy::Mode m) noexcept {
  switch (m) {
    case QuorumPolicy::Mode::any: return "any";
    case QuorumPolicy::Mode::majority: return "majority";
    case QuorumPolicy::Mode::all: return "all";
  }
  return "?";
}

bool parse_quorum_mode(std::string_view name, QuorumPolicy::Mode& out) noexcept {
  if (name == "any") out = QuorumPolicy::Mode::any;
  else if (name == "majority") out = QuorumPolicy::Mode::majority;
  else if (name == "all") out = QuorumPolicy::Mode::all;
  else return false;
  return true;
}

std::optional<SignalWindow> extract_window(const RingBuffer& buf, const DetectorParams& params,
                                           TimeMs now_ms) {
  const std::size_t n = params.window_samples();
  if (n == 0 || buf.size() < n) return std::nullopt;
  // Newest sample at or before now.
  std::size_t end = buf.size();
  while (end > 0 && buf.at(end - 1).timestamp_ms > now_ms) --end;
  if (end < n) return std::nullopt;
  const std::size_t first = end - n;
  const TimeMs start_ms = buf.at(first).timestamp_ms;
  if (buf.at(end - 1).timestamp_ms - start_ms >= params.window_ms) return std::nullopt;

  SignalWindow w{buf.probe_id(), {}, start_ms, start_ms + params.window_ms};
  w.samples.reserve(n);
  for (std::size_t i = first; i < end; ++i) w.samples.push_back(buf.at(i));
  return w;
}

bool evaluate_quorum(std::span<const DetectionResult> results, const QuorumPolicy& policy,
                     std::size_t probe_count) {
  std::set<NodeId> triggered;
  for (const auto& r : results)
    if (r.triggered) triggered.insert(r.probe_id);
  const std::size_t k = triggered.size();
  switch (policy.mode) {
    case QuorumPolicy::Mode::any: return k >= 1;
    case QuorumPolicy::Mode::majority: return 2 * k > probe_count;
    case QuorumPolicy::Mode::all: return probe_count > 0 && k >= probe_count;
  }
  return false;
}

DetectionPipeline::DetectionPipeline(DetectorParams params, QuorumPolicy policy)
    : params_(std::move(params)), policy_(policy) {}

void DetectionPipeline::add_probe(const NodeId& probe) {
  if (channels_.contains(probe)) return;
  channels_.emplace(probe, Channel{RingBuffer(probe, params_.buffer_capacity()), make_algorithm(params_), {}});
}

void DetectionPipeline::remove_probe(const NodeId& probe) {
  channels_.erase(probe);
  std::erase_if(recent_, [&](const Trigger& t) { return t.result.probe_id == probe; });
}

std::vector<NodeId> DetectionPipeline::probes() const {
  std::vector<NodeId> out;
  for (const auto& [id, _] : channels_) out.push_back(id);
  return out;
}

PushStats DetectionPipeline::push(const NodeId& probe, std::span<const AccelSample> batch) {
  add_probe(probe);
  return channels_.at(probe).buffer.push(batch);
}

const RingBuffer* DetectionPipeline::buffer(const NodeId& probe) const {
  auto it = channels_.find(probe);
  return it == channels_.end() ? nullptr : &it->second.buffer;
}

TickReport DetectionPipeline::tick(TimeMs now_ms) {
  TickReport report;
  for (auto& [id, ch] : channels_) {
    auto window = extract_window(ch.buffer, params_, now_ms);
    if (!window) {
      ++report.insufficient;
      continue;
    }
    if (ch.last_window_start && *ch.last_window_start >= window->window_start_ms) {
      ++report.stale;
      continue;
    }
    ch.last_window_start = window->window_start_ms;
    auto result = ch.algorithm->evaluate(*window);
    if (!result) {
      ++report.degenerate;
      continue;
    }
    if (result->triggered) recent_.push_back({now_ms, *result});
    report.results.push_back(std::move(result).value());
  }

  while (!recent_.empty() && recent_.front().at_ms <= now_ms - policy_.evaluation_window_ms)
    recent_.pop_front();

  std::vector<DetectionResult> pending;
  pending.reserve(recent_.size());
  for (const auto& t : recent_) pending.push_back(t.result);
  if (!pending.empty() && evaluate_quorum(pending, policy_, channels_.size())) {
    const auto best = std::max_element(pending.begin(), pending.end(), [](const auto& a, const auto& b) {
      return a.score < b.score || (a.score == b.score && b.probe_id < a.probe_id);
    });
    LocalAlert alert{best->window, best->score, {}};
    std::set<NodeId> ids;
    for (const auto& r : pending) ids.insert(r.probe_id);
    alert.triggered_probes.assign(ids.begin(), ids.end());
    report.alert = std::move(alert);
    recent_.clear();
  }
  return report;
}

}  // namespace quakemesh::detection
