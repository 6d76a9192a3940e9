// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "quakemesh/core.hpp"

namespace quakemesh::protocol {

/// Origin-scoped message identity: no global coordination needed.
struct MessageId {
  NodeId origin;
  std::uint64_t seq = 0;

  auto operator<=>(const MessageId&) const = default;
  bool operator==(const MessageId&) const = default;
  std::string str() const { return origin.str() + "#" + std::to_string(seq); }
};

/// The gossiped alert. Table fields are timestamp, origin location and the
/// triggering signal; id and hop_count are relay bookkeeping.
struct EEWMessage {
  MessageId id;
  TimeMs timestamp_ms = 0;
  GeoLocation origin_location;
  SignalWindow signal_window;
  std::uint32_t hop_count = 0;

  bool operator==(const EEWMessage&) const = default;

  EEWMessage relayed() const {
    EEWMessage copy = *this;
    ++copy.hop_count;
    return copy;
  }
};

struct NeighborEntry {
  NodeId node_id;
  std::string endpoint;
  GeoLocation location;
  bool operator==(const NeighborEntry&) const = default;
};

struct ProbeHello {
  GeoLocation location;
  bool operator==(const ProbeHello&) const = default;
};
struct SampleBatch {
  std::vector<AccelSample> samples;
  bool operator==(const SampleBatch&) const = default;
};
struct Register {
  GeoLocation location;
  std::string endpoint;
  TimeMs ttl_ms = 0;
  TimeMs at_ms = 0;
  bool operator==(const Register&) const = default;
};
struct RegisterAck {
  std::vector<NeighborEntry> neighbors;
  bool operator==(const RegisterAck&) const = default;
};
struct ProbeQuery {
  GeoLocation location;
  std::vector<NodeId> exclude;  // detectors the probe already failed to reach
  bool operator==(const ProbeQuery&) const = default;
};
struct ProbeAssign {
  std::optional<NeighborEntry> detector;  // empty: no detector available
  bool operator==(const ProbeAssign&) const = default;
};
struct Eew {
  EEWMessage message;
  bool operator==(const Eew&) const = default;
};
struct EewLog {
  EEWMessage message;
  TimeMs at_ms = 0;
  bool operator==(const EewLog&) const = default;
};
struct Ping {
  bool operator==(const Ping&) const = default;
};
struct Pong {
  bool operator==(const Pong&) const = default;
};

// Alternative order defines the Kind enumeration below.
using Payload =
    std::variant<ProbeHello, SampleBatch, Register, RegisterAck, ProbeQuery, ProbeAssign, Eew, EewLog, Ping, Pong>;

enum class Kind : std::uint8_t {
  ProbeHello,
  SampleBatch,
  Register,
  RegisterAck,
  ProbeQuery,
  ProbeAssign,
  Eew,
  EewLog,
  Ping,
  Pong,
};

inline constexpr std::size_t kKindCount = std::variant_size_v<Payload>;

std::string_view to_string(Kind k) noexcept;
std::optional<Kind> parse_kind(std::string_view name) noexcept;

struct Envelope {
  NodeId sender;
  std::uint64_t seq = 0;
  Payload payload;

  Kind kind() const noexcept { return static_cast<Kind>(payload.index()); }
  bool operator==(const Envelope&) const = default;
};

}  // namespace quakemesh::protocol

template <>
struct std::hash<quakemesh::protocol::MessageId> {
  std::size_t operator()(const quakemesh::protocol::MessageId& id) const noexcept {
    return std::hash<quakemesh::NodeId>{}(id.origin) * 1000003u ^ std::hash<std::uint64_t>{}(id.seq);
  }
};
