// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "quakemesh/authority/registry.hpp"
#include "quakemesh/protocol/messages.hpp"

namespace quakemesh::authority {

struct ServiceConfig {
  std::size_t k = 4;
  TimeMs ttl_ms = 90000;
};

/// Wire-facing front of a Registry: Register -> RegisterAck,
/// ProbeQuery -> ProbeAssign, EewLog -> appended, Ping -> Pong.
class AuthorityService {
 public:
  AuthorityService(NodeId id, ServiceConfig cfg) : id_(std::move(id)), cfg_(cfg) {}

  std::optional<protocol::Envelope> handle(const protocol::Envelope& in, TimeMs now_ms);

  const NodeId& id() const noexcept { return id_; }
  Registry& registry() noexcept { return registry_; }
  const Registry& registry() const noexcept { return registry_; }
  std::size_t ignored() const noexcept { return ignored_; }

 private:
  protocol::Envelope reply(protocol::Payload p) { return {id_, ++seq_, std::move(p)}; }

  NodeId id_;
  ServiceConfig cfg_;
  Registry registry_;
  std::uint64_t seq_ = 0;
  std::size_t ignored_ = 0;
};

}  // namespace quakemesh::authority
