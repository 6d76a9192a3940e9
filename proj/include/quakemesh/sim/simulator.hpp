// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "quakemesh/expected.hpp"
#include "quakemesh/node/actor.hpp"
#include "quakemesh/node/authority_node.hpp"
#include "quakemesh/node/detector.hpp"
#include "quakemesh/node/probe.hpp"
#include "quakemesh/protocol/codec.hpp"
#include "quakemesh/sim/report.hpp"
#include "quakemesh/sim/scenario.hpp"
#include "quakemesh/sim/synthetic.hpp"

namespace quakemesh::sim {

using DetectorFactory =
    std::function<std::unique_ptr<node::Detector>(node::DetectorConfig, node::AlertSink, node::ResultSink)>;

struct InvalidScenario {
  std::vector<Diagnostic> diagnostics;
};

enum class FaultError { UnknownNode };

/// Single-threaded discrete-event simulation of one scenario under one seed.
class Simulator {
 public:
  Simulator(Scenario scenario, std::uint64_t seed);

  /// Replaces how detector actors are built (test doubles).
  void set_detector_factory(DetectorFactory f) { detector_factory_ = std::move(f); }

  /// Runs to the scenario's end and returns the audited report.
  SimReport run();

  /// Processes every event up to and including `t_ms`.
  void advance_to(TimeMs t_ms);
  TimeMs now() const noexcept { return now_; }

  /// Applies a fault immediately at the current simulated time.
  std::optional<FaultError> apply_fault(const FaultAction& f);

  bool is_up(const NodeId& id) const;
  /// Live detector actor, if any.
  const node::Detector* detector(const NodeId& id) const;
  const node::Probe* probe(const NodeId& id) const;

  /// Authority replica access after (or during) a run.
  const node::AuthorityNode* authority(const NodeId& id) const;

 private:
  class Context;
  friend class Context;

  struct Slot {
    node::Role role;
    std::unique_ptr<node::Actor> actor;
    bool up = false;
    std::uint32_t epoch = 0;
    std::optional<GeoLocation> location;
  };

  struct Deliver {
    NodeId from;
    NodeId to;
    std::uint32_t epoch;
    protocol::Bytes bytes;
    std::size_t trace_index;
  };
  struct Timer {
    NodeId node;
    std::uint32_t epoch;
    std::uint64_t id;
  };
  struct Boot {
    NodeId node;
  };
  struct Fault {
    std::size_t index;
  };
  struct Replicate {};
  using Payload = std::variant<Deliver, Timer, Boot, Fault, Replicate>;

  struct Event {
    TimeMs at;
    std::uint64_t seq;
    Payload payload;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const noexcept {
      return a.at > b.at || (a.at == b.at && a.seq > b.seq);
    }
  };

  void schedule(TimeMs at, Payload p);
  bool transmit(const NodeId& from, const NodeId& to, const protocol::Envelope& env);
  bool link_up(const NodeId& a, const NodeId& b) const;
  LinkSpec link_spec(const NodeId& a, const NodeId& b) const;
  bool lose(const NodeId& a, const NodeId& b, double p);
  void boot(const NodeId& id);
  void harvest(const Slot& slot);
  void replicate();
  void dispatch(const Event& e);
  void on_alert(const node::AlertEvent& a);
  std::unique_ptr<node::Actor> make_actor(const NodeId& id);
  void finalize(SimReport& report);

  Scenario scenario_;
  std::uint64_t seed_;
  DetectorFactory detector_factory_;

  TimeMs now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::map<NodeId, Slot> slots_;
  std::map<NodeId, std::vector<BurstSchedule>> bursts_;
  std::map<std::pair<NodeId, NodeId>, std::mt19937_64> link_rng_;
  std::set<NodeId> partition_a_;
  std::set<NodeId> partition_b_;
  std::map<NodeId, std::size_t> authority_report_failures_;  // harvested at crash
  std::size_t duplicate_deliveries_ = 0;
  std::size_t malformed_ = 0;
  SimReport report_;
};

/// Validates, then runs. The error carries field-level diagnostics.
Expected<SimReport, InvalidScenario> run_scenario(const Scenario& scenario, std::uint64_t seed);

}  // namespace quakemesh::sim
