// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/sim/synthetic.hpp"

#include <cmath>
#include <numbers>

namespace quakemesh::sim {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  for (unsigned char c : label) h = mix(h ^ c);
  return h;
}

std::vector<BurstSchedule> inject_quake(const QuakeSource& source, std::span<const ProbeSpec> probes) {
  std::vector<BurstSchedule> out;
  out.reserve(probes.size());
  const auto duration = static_cast<TimeMs>(std::llround(source.burst_duration_s * 1000.0));
  for (const auto& p : probes) {
    const double km = haversine_distance(source.epicenter, p.location);
    const auto delay = static_cast<TimeMs>(std::llround(km / source.wave_speed_km_s * 1000.0));
    const TimeMs onset = source.origin_time_ms + delay;
    out.push_back({p.id, onset, onset + duration, source.burst_amplitude_g, source.burst_frequency_hz});
  }
  return out;
}

double burst_value(const BurstSchedule& b, TimeMs t) noexcept {
  if (t < b.onset_ms || t >= b.end_ms) return 0.0;
  const double tau = static_cast<double>(t - b.onset_ms) / 1000.0;
  const double dur = static_cast<double>(b.end_ms - b.onset_ms) / 1000.0;
  const double envelope = std::sin(std::numbers::pi * tau / dur);
  return b.peak_g * envelope * std::sin(2.0 * std::numbers::pi * b.frequency_hz * tau + std::numbers::pi / 2.0);
}

SyntheticSource::SyntheticSource(std::uint64_t seed, double noise_floor_g, std::vector<BurstSchedule> bursts)
    : rng_(seed), sigma_(noise_floor_g), bursts_(std::move(bursts)) {}

AccelSample SyntheticSource::sample(TimeMs t) {
  const double x = sigma_ * noise_(rng_);
  const double y = sigma_ * noise_(rng_);
  const double z = sigma_ * noise_(rng_);
  AccelSample s{t, x, y, 1.0 + z};
  for (const auto& b : bursts_) s.z += burst_value(b, t);
  return s;
}

}  // namespace quakemesh::sim
