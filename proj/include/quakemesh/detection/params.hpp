// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "quakemesh/core.hpp"

namespace quakemesh::detection {

enum class Algorithm { zscore, sta_lta };

std::string_view to_string(Algorithm a) noexcept;
/// Returns false when `name` is not a known algorithm.
bool parse_algorithm(std::string_view name, Algorithm& out) noexcept;

struct DetectorParams {
  TimeMs window_ms = 2000;
  TimeMs slide_ms = 1000;
  double sample_rate_hz = 100.0;
  Algorithm algorithm = Algorithm::zscore;

  // zscore
  double threshold_z = 3.0;
  TimeMs baseline_horizon_ms = 60000;

  // sta_lta; the ratio is bounded above by lta/sta because the long window
  // contains the short one, so the threshold must stay below that bound.
  double sta_seconds = 0.5;
  double lta_seconds = 2.0;
  double threshold_ratio = 2.5;

  std::size_t window_samples() const noexcept;
  std::size_t buffer_capacity() const noexcept { return 2 * window_samples(); }

  /// Empty string when the parameters are consistent, otherwise a diagnostic.
  std::string validate() const;
};

}  // namespace quakemesh::detection
