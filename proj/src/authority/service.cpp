// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/authority/service.hpp"

namespace quakemesh::authority {

std::optional<protocol::Envelope> AuthorityService::handle(const protocol::Envelope& in, TimeMs now_ms) {
  using namespace protocol;
  if (const auto* reg = std::get_if<Register>(&in.payload)) {
    const TimeMs ttl = reg->ttl_ms > 0 ? reg->ttl_ms : cfg_.ttl_ms;
    auto neighbors = registry_.register_detector({in.sender, reg->location, reg->endpoint, now_ms, ttl}, cfg_.k);
    return reply(RegisterAck{std::move(neighbors)});
  }
  if (const auto* q = std::get_if<ProbeQuery>(&in.payload)) {
    auto assigned = registry_.assign_probe(q->location, now_ms, q->exclude);
    if (!assigned) return reply(ProbeAssign{});
    return reply(ProbeAssign{*assigned});
  }
  if (const auto* log = std::get_if<EewLog>(&in.payload)) {
    registry_.log_eew({now_ms, log->message, in.sender});
    return std::nullopt;
  }
  if (std::holds_alternative<Ping>(in.payload)) return reply(Pong{});
  ++ignored_;
  return std::nullopt;
}

}  // namespace quakemesh::authority
