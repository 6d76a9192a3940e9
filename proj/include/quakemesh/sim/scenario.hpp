// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "quakemesh/core.hpp"
#include "quakemesh/detection/pipeline.hpp"
#include "quakemesh/protocol/gossip.hpp"

namespace quakemesh::sim {

struct LinkSpec {
  TimeMs latency_ms = 10;
  double loss_probability = 0.0;
  bool up = true;
};

struct NetworkSpec {
  LinkSpec detector_link{10, 0.0, true};
  LinkSpec probe_link{5, 0.0, true};
  LinkSpec authority_link{20, 0.0, true};
  /// Per-pair overrides; key is the ordered (smaller id, larger id) pair.
  std::map<std::pair<NodeId, NodeId>, LinkSpec> overrides;
};

struct QuakeSource {
  GeoLocation epicenter;
  TimeMs origin_time_ms = 0;
  double wave_speed_km_s = 6.0;
  double burst_amplitude_g = 0.02;
  double burst_duration_s = 5.0;
  double noise_floor_g = 1e-3;
  double burst_frequency_hz = 5.0;  // carrier under the half-sine envelope
};

struct FaultAction {
  enum class Type { crash_node, revive_node, partition, heal_partition, authority_down, authority_up };
  TimeMs at_ms = 0;
  Type type = Type::crash_node;
  std::optional<NodeId> node;  // crash/revive target, or one authority replica
  std::vector<NodeId> side_a;  // partition
  std::vector<NodeId> side_b;
};

std::string_view to_string(FaultAction::Type t) noexcept;

struct DetectorSpec {
  NodeId id;
  GeoLocation location;
  TimeMs boot_ms = 0;
};

struct ProbeSpec {
  NodeId id;
  GeoLocation location;
  TimeMs boot_ms = 1000;
  std::optional<NodeId> fixed_detector;  // otherwise assigned by the authority
};

struct AuthoritySpec {
  std::vector<NodeId> replicas{NodeId("authority")};
  std::size_t k = 4;
  TimeMs ttl_ms = 90000;
  TimeMs reregister_ms = 30000;
  TimeMs replication_interval_ms = 5000;
};

struct Scenario {
  std::string name = "scenario";
  TimeMs duration_ms = 60000;
  std::vector<std::uint64_t> seeds{1};
  double noise_floor_g = 1e-3;
  bool suppress_after_remote = true;

  AuthoritySpec authority;
  protocol::GossipConfig gossip;
  detection::DetectorParams detection;
  detection::QuorumPolicy quorum;
  NetworkSpec network;

  std::vector<DetectorSpec> detectors;
  std::vector<ProbeSpec> probes;
  std::vector<QuakeSource> quakes;
  std::vector<FaultAction> faults;  // applied in at_ms order
};

struct Diagnostic {
  std::string field;
  std::string message;
};

/// All problems found, empty when the scenario can run.
std::vector<Diagnostic> validate(const Scenario& s);

struct GridOptions {
  int rows = 5;
  int cols = 5;
  double spacing_km = 10.0;
  GeoLocation origin{41.9, 12.5};  // south-west corner
  bool colocated_probes = true;
  TimeMs detector_boot_step_ms = 100;
  TimeMs probe_boot_ms = 1000;
};

/// Detectors "d<r><c>" on a rows x cols lattice with optional co-located
/// probes "p<r><c>". Only the node lists are filled in.
void add_grid(Scenario& s, const GridOptions& g);
std::string grid_node_id(char prefix, int row, int col);

}  // namespace quakemesh::sim
