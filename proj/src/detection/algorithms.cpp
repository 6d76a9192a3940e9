// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/detection/algorithms.hpp"

#include <cmath>

namespace quakemesh::detection {

Detection zscore_detect(const SignalWindow& window, double baseline_mean, double baseline_std,
                        double threshold_z) {
  if (!(baseline_std >= kDegenerateFloorG)) return unexpected(DetectError::degenerate_baseline);
  double score = 0.0;
  for (const auto& s : window.samples) {
    const double z = std::abs(vector_magnitude(s) - baseline_mean) / baseline_std;
    if (z > score) score = z;
  }
  return DetectionResult{window.probe_id, window, score > threshold_z, score};
}

Detection sta_lta_detect(const SignalWindow& window, double sta_seconds, double lta_seconds,
                         double threshold_ratio) {
  const auto sta_from = window.window_end_ms - static_cast<TimeMs>(std::llround(sta_seconds * 1000.0));
  const auto lta_from = window.window_end_ms - static_cast<TimeMs>(std::llround(lta_seconds * 1000.0));
  double sta_sum = 0.0, lta_sum = 0.0;
  std::size_t sta_n = 0, lta_n = 0;
  for (const auto& s : window.samples) {
    const double dev = std::abs(vector_magnitude(s) - 1.0);
    if (s.timestamp_ms >= lta_from) {
      lta_sum += dev;
      ++lta_n;
    }
    if (s.timestamp_ms >= sta_from) {
      sta_sum += dev;
      ++sta_n;
    }
  }
  if (lta_n == 0 || sta_n == 0) return unexpected(DetectError::degenerate_baseline);
  const double lta = lta_sum / static_cast<double>(lta_n);
  if (!(lta >= kDegenerateFloorG)) return unexpected(DetectError::degenerate_baseline);
  const double score = (sta_sum / static_cast<double>(sta_n)) / lta;
  return DetectionResult{window.probe_id, window, score > threshold_ratio, score};
}

void BaselineEstimator::add(const SignalWindow& window) {
  if (window.samples.empty()) return;
  Part p{window.window_end_ms, 0.0, 0.0, 0.0};
  for (const auto& s : window.samples) {
    const double x = vector_magnitude(s);
    p.n += 1.0;
    const double d = x - p.mean;
    p.mean += d / p.n;
    p.m2 += d * (x - p.mean);
  }
  parts_.push_back(p);
}

void BaselineEstimator::evict_before(TimeMs cutoff_ms) {
  while (!parts_.empty() && parts_.front().end_ms <= cutoff_ms) parts_.pop_front();
}

namespace {
// Chan et al. pairwise combination of (n, mean, M2).
struct Pooled {
  double n = 0.0, mean = 0.0, m2 = 0.0;
  void merge(double nb, double mb, double m2b) {
    if (nb == 0.0) return;
    const double total = n + nb;
    const double delta = mb - mean;
    mean += delta * nb / total;
    m2 += m2b + delta * delta * n * nb / total;
    n = total;
  }
};
}  // namespace

double BaselineEstimator::mean() const noexcept {
  Pooled acc;
  for (const auto& p : parts_) acc.merge(p.n, p.mean, p.m2);
  return acc.mean;
}

double BaselineEstimator::stddev() const noexcept {
  Pooled acc;
  for (const auto& p : parts_) acc.merge(p.n, p.mean, p.m2);
  return acc.n > 0.0 ? std::sqrt(acc.m2 / acc.n) : 0.0;
}

Detection ZScoreDetector::evaluate(const SignalWindow& window) {
  baseline_.evict_before(window.window_end_ms - baseline_.horizon_ms());
  bool seeded = false;
  if (baseline_.empty()) {
    baseline_.add(window);
    seeded = true;
  }
  const double sd = baseline_.stddev();
  if (!(sd >= kDegenerateFloorG)) {
    baseline_.clear();
    baseline_.add(window);
    return unexpected(DetectError::degenerate_baseline);
  }
  auto result = zscore_detect(window, baseline_.mean(), sd, threshold_);
  if (result && !result->triggered && !seeded) baseline_.add(window);
  return result;
}

std::unique_ptr<DetectionAlgorithm> make_algorithm(const DetectorParams& params) {
  switch (params.algorithm) {
    case Algorithm::zscore:
      return std::make_unique<ZScoreDetector>(params.threshold_z, params.baseline_horizon_ms);
    case Algorithm::sta_lta:
      return std::make_unique<StaLtaDetector>(params.sta_seconds, params.lta_seconds, params.threshold_ratio);
  }
  return nullptr;
}

}  // namespace quakemesh::detection
