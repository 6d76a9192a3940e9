// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quakemesh/authority/service.hpp"
#include "quakemesh/node/actor.hpp"

namespace quakemesh::node {

/// Hosts one authority replica on the network.
class AuthorityNode : public Actor {
 public:
  AuthorityNode(NodeId id, authority::ServiceConfig cfg, TimeMs expiry_sweep_ms = 10000)
      : service_(std::move(id), cfg), sweep_ms_(expiry_sweep_ms) {}

  const NodeId& id() const noexcept override { return service_.id(); }
  Role role() const noexcept override { return Role::authority; }
  void start(NodeContext& ctx) override { ctx.set_timer(sweep_ms_, 1); }
  void on_message(NodeContext& ctx, const NodeId& from, const protocol::Envelope& env) override {
    if (auto reply = service_.handle(env, ctx.now())) ctx.send(from, *reply);
  }
  void on_timer(NodeContext& ctx, std::uint64_t) override {
    evicted_ += service_.registry().expire_leases(ctx.now());
    ctx.set_timer(sweep_ms_, 1);
  }

  authority::AuthorityService& service() noexcept { return service_; }
  const authority::AuthorityService& service() const noexcept { return service_; }
  std::size_t evicted() const noexcept { return evicted_; }

 private:
  authority::AuthorityService service_;
  TimeMs sweep_ms_;
  std::size_t evicted_ = 0;
};

}  // namespace quakemesh::node
