// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>

#include "quakemesh/core.hpp"
#include "quakemesh/protocol/messages.hpp"

namespace quakemesh::node {

enum class Role { probe, detector, authority };

std::string_view to_string(Role r) noexcept;

/// What a node can do to the outside world. Implemented by the simulator's
/// virtual network (or by a socket transport using the same framing).
class NodeContext {
 public:
  virtual ~NodeContext() = default;
  virtual TimeMs now() const = 0;
  /// False when the destination is unreachable (crashed, partitioned, unknown).
  /// A message silently lost in transit still reports true.
  virtual bool send(const NodeId& to, const protocol::Envelope& env) = 0;
  virtual void set_timer(TimeMs delay_ms, std::uint64_t timer_id) = 0;
};

/// A node is a single logical actor: events arrive one at a time.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual const NodeId& id() const noexcept = 0;
  virtual Role role() const noexcept = 0;
  virtual void start(NodeContext& ctx) = 0;
  virtual void on_message(NodeContext& ctx, const NodeId& from, const protocol::Envelope& env) = 0;
  virtual void on_timer(NodeContext& ctx, std::uint64_t timer_id) = 0;
};

/// Exponential retry delay: base, 2*base, ... capped.
class Backoff {
 public:
  Backoff(TimeMs base_ms = 1000, TimeMs cap_ms = 60000) : base_(base_ms), cap_(cap_ms) {}

  TimeMs next() {
    TimeMs d = base_;
    for (int i = 0; i < attempts_ && d < cap_; ++i) d *= 2;
    ++attempts_;
    return std::min(d, cap_);
  }
  void reset() noexcept { attempts_ = 0; }
  int attempts() const noexcept { return attempts_; }

 private:
  TimeMs base_;
  TimeMs cap_;
  int attempts_ = 0;
};

/// Timer ids carry a kind in the high half and a generation in the low half so
/// that stale timers can be recognised and ignored.
constexpr std::uint64_t make_timer(std::uint32_t kind, std::uint32_t generation) noexcept {
  return (std::uint64_t{kind} << 32) | generation;
}
constexpr std::uint32_t timer_kind(std::uint64_t id) noexcept { return static_cast<std::uint32_t>(id >> 32); }
constexpr std::uint32_t timer_generation(std::uint64_t id) noexcept { return static_cast<std::uint32_t>(id); }

}  // namespace quakemesh::node
