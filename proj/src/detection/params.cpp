// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/detection/params.hpp"

#include <cmath>

namespace quakemesh::detection {

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::zscore: return "zscore";
    case Algorithm::sta_lta: return "sta_lta";
  }
  return "?";
}

bool parse_algorithm(std::string_view name, Algorithm& out) noexcept {
  if (name == "zscore") {
    out = Algorithm::zscore;
    return true;
  }
  if (name == "sta_lta") {
    out = Algorithm::sta_lta;
    return true;
  }
  return false;
}

std::size_t DetectorParams::window_samples() const noexcept {
  return static_cast<std::size_t>(std::llround(static_cast<double>(window_ms) * sample_rate_hz / 1000.0));
}

std::string DetectorParams::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) return "sample_rate_hz must be > 0";
  if (slide_ms <= 0) return "slide_ms must be > 0";
  if (window_ms <= slide_ms) return "window_ms must exceed slide_ms";
  const double exact = static_cast<double>(window_ms) * sample_rate_hz / 1000.0;
  if (std::abs(exact - std::round(exact)) > 1e-9 || exact < 1.0)
    return "window_ms x sample_rate_hz must be a whole number of samples";
  if (!(threshold_z > 0.0)) return "threshold_z must be > 0";
  if (baseline_horizon_ms < window_ms) return "baseline_horizon_ms must be at least one window";
  if (!(sta_seconds > 0.0) || !(sta_seconds < lta_seconds)) return "sta_seconds must be in (0, lta_seconds)";
  if (lta_seconds * 1000.0 > static_cast<double>(window_ms) + 1e-9) return "lta_seconds must not exceed the window";
  if (!(threshold_ratio > 0.0)) return "threshold_ratio must be > 0";
  if (algorithm == Algorithm::sta_lta && !(threshold_ratio < lta_seconds / sta_seconds))
    return "threshold_ratio must be below lta_seconds / sta_seconds, the largest ratio a window can reach";
  return {};
}

}  // namespace quakemesh::detection
