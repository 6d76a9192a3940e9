// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "quakemesh/node/probe.hpp"
#include "quakemesh/sim/scenario.hpp"

namespace quakemesh::sim {

/// One probe's view of one quake: when shaking starts and how strong it is.
struct BurstSchedule {
  NodeId probe;
  TimeMs onset_ms;
  TimeMs end_ms;
  double peak_g;
  double frequency_hz;
};

/// Onset at origin time plus epicentral distance over wave speed.
std::vector<BurstSchedule> inject_quake(const QuakeSource& source, std::span<const ProbeSpec> probes);

/// Vertical-axis burst value at time t (zero outside the burst).
double burst_value(const BurstSchedule& b, TimeMs t) noexcept;

/// Gaussian noise around (0, 0, 1) g with any scheduled bursts added on z.
class SyntheticSource final : public node::SampleSource {
 public:
  SyntheticSource(std::uint64_t seed, double noise_floor_g, std::vector<BurstSchedule> bursts);
  AccelSample sample(TimeMs t) override;

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_{0.0, 1.0};
  double sigma_;
  std::vector<BurstSchedule> bursts_;
};

/// splitmix64 over a string, mixed with a seed. Stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

}  // namespace quakemesh::sim
