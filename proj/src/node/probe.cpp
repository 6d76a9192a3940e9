// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/node/probe.hpp"

#include <cmath>

namespace quakemesh::node {

using namespace quakemesh::protocol;

Probe::Probe(ProbeConfig cfg, std::unique_ptr<SampleSource> source)
    : cfg_(std::move(cfg)), source_(std::move(source)), backoff_(cfg_.backoff_base_ms, cfg_.backoff_cap_ms) {}

TimeMs Probe::sample_period_ms() const {
  return static_cast<TimeMs>(std::llround(1000.0 / cfg_.sample_rate_hz));
}

TimeMs Probe::batch_period_ms() const { return sample_period_ms() * static_cast<TimeMs>(cfg_.batch_size); }

bool Probe::send(NodeContext& ctx, const NodeId& to, Payload payload) {
  return ctx.send(to, Envelope{cfg_.id, ++seq_, std::move(payload)});
}

void Probe::start(NodeContext& ctx) {
  const TimeMs p = sample_period_ms();
  cursor_ms_ = (ctx.now() + p - 1) / p * p;
  if (cfg_.fixed_detector) connect(ctx, *cfg_.fixed_detector);
  else query(ctx);
}

void Probe::query(NodeContext& ctx) {
  ProbeQuery q{cfg_.location, std::vector<NodeId>(failed_.begin(), failed_.end())};
  for (const auto& auth : cfg_.authorities) {
    if (send(ctx, auth, q)) {
      ++stats_.queries;
      awaiting_assign_ = true;
      ctx.set_timer(cfg_.query_timeout_ms, make_timer(kQueryTimeout, ++query_generation_));
      return;
    }
  }
  ++stats_.query_failures;
  if (cfg_.known_detector && !failed_.contains(*cfg_.known_detector)) {
    connect(ctx, *cfg_.known_detector);
    return;
  }
  retry_query(ctx, backoff_.next());
}

void Probe::retry_query(NodeContext& ctx, TimeMs delay) {
  awaiting_assign_ = false;
  ctx.set_timer(delay, make_timer(kQuery, ++query_generation_));
}

void Probe::connect(NodeContext& ctx, const NodeId& detector) {
  if (send(ctx, detector, ProbeHello{cfg_.location})) {
    assigned_ = detector;
    cfg_.known_detector = detector;
    failed_.clear();
    backoff_.reset();
    const TimeMs p = sample_period_ms();
    cursor_ms_ = std::max(cursor_ms_, (ctx.now() + p - 1) / p * p);
    ctx.set_timer(batch_period_ms(), make_timer(kBatch, ++stream_generation_));
    return;
  }
  failed_.insert(detector);
  if (cfg_.fixed_detector) ctx.set_timer(cfg_.reconnect_delay_ms, make_timer(kConnect, ++stream_generation_));
  else retry_query(ctx, backoff_.next());
}

void Probe::send_batch(NodeContext& ctx) {
  const TimeMs now = ctx.now();
  const TimeMs p = sample_period_ms();
  SampleBatch batch;
  batch.samples.reserve(cfg_.batch_size);
  for (; cursor_ms_ < now; cursor_ms_ += p) batch.samples.push_back(source_->sample(cursor_ms_));
  const std::size_t n = batch.samples.size();
  if (send(ctx, *assigned_, std::move(batch))) {
    ++stats_.batches_sent;
    stats_.samples_sent += n;
    ctx.set_timer(batch_period_ms(), make_timer(kBatch, stream_generation_));
    return;
  }
  ++stats_.connection_losses;
  failed_.insert(*assigned_);
  assigned_.reset();
  ++stream_generation_;
  if (cfg_.fixed_detector) ctx.set_timer(cfg_.reconnect_delay_ms, make_timer(kConnect, stream_generation_));
  else retry_query(ctx, cfg_.reconnect_delay_ms);
}

void Probe::on_message(NodeContext& ctx, const NodeId&, const Envelope& env) {
  const auto* assign = std::get_if<ProbeAssign>(&env.payload);
  if (!assign || !awaiting_assign_) return;
  awaiting_assign_ = false;
  if (assign->detector) {
    ++stats_.assignments;
    connect(ctx, assign->detector->node_id);
    return;
  }
  ++stats_.unavailable;
  failed_.clear();
  retry_query(ctx, backoff_.next());
}

void Probe::on_timer(NodeContext& ctx, std::uint64_t timer_id) {
  const auto gen = timer_generation(timer_id);
  switch (timer_kind(timer_id)) {
    case kBatch:
      if (assigned_ && gen == stream_generation_) send_batch(ctx);
      break;
    case kQuery:
      if (gen == query_generation_ && !assigned_) query(ctx);
      break;
    case kQueryTimeout:
      if (gen == query_generation_ && awaiting_assign_) {
        ++stats_.query_failures;
        retry_query(ctx, backoff_.next());
      }
      break;
    case kConnect:
      if (gen == stream_generation_ && !assigned_) {
        if (cfg_.fixed_detector) connect(ctx, *cfg_.fixed_detector);
        else query(ctx);
      }
      break;
    default: break;
  }
}

}  // namespace quakemesh::node
