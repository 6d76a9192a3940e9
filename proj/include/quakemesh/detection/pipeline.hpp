// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "quakemesh/detection/algorithms.hpp"
#include "quakemesh/detection/params.hpp"
#include "quakemesh/detection/ring_buffer.hpp"

namespace quakemesh::detection {

struct QuorumPolicy {
  enum class Mode { any, majority, all };
  Mode mode = Mode::any;
  TimeMs evaluation_window_ms = 2000;
};

std::string_view to_string(QuorumPolicy::Mode m) noexcept;
bool parse_quorum_mode(std::string_view name, QuorumPolicy::Mode& out) noexcept;

/// Most recent `window_samples` samples at or before `now_ms`, or nullopt while
/// the buffer holds too few samples (or they do not fit in one window span).
std::optional<SignalWindow> extract_window(const RingBuffer& buf, const DetectorParams& params,
                                           TimeMs now_ms);

/// Counts distinct triggered probes among `results` against the policy.
bool evaluate_quorum(std::span<const DetectionResult> results, const QuorumPolicy& policy,
                     std::size_t probe_count);

struct LocalAlert {
  SignalWindow window;  // from the highest-scoring triggered probe
  double score = 0.0;
  std::vector<NodeId> triggered_probes;
};

struct TickReport {
  std::vector<DetectionResult> results;
  std::optional<LocalAlert> alert;
  std::size_t insufficient = 0;
  std::size_t degenerate = 0;
  std::size_t stale = 0;  // no new samples since the previous tick
};

/// One ring buffer and one algorithm instance per probe, plus the quorum rule
/// over all of them.
class DetectionPipeline {
 public:
  DetectionPipeline(DetectorParams params, QuorumPolicy policy);

  void add_probe(const NodeId& probe);
  void remove_probe(const NodeId& probe);
  bool has_probe(const NodeId& probe) const { return channels_.contains(probe); }
  std::size_t probe_count() const noexcept { return channels_.size(); }
  std::vector<NodeId> probes() const;

  /// Adds the probe on first sight.
  PushStats push(const NodeId& probe, std::span<const AccelSample> batch);

  TickReport tick(TimeMs now_ms);

  const RingBuffer* buffer(const NodeId& probe) const;
  const DetectorParams& params() const noexcept { return params_; }
  const QuorumPolicy& policy() const noexcept { return policy_; }

 private:
  struct Channel {
    RingBuffer buffer;
    std::unique_ptr<DetectionAlgorithm> algorithm;
    std::optional<TimeMs> last_window_start;
  };
  struct Trigger {
    TimeMs at_ms;
    DetectionResult result;
  };

  DetectorParams params_;
  QuorumPolicy policy_;
  std::map<NodeId, Channel> channels_;
  std::deque<Trigger> recent_;
};

}  // namespace quakemesh::detection
