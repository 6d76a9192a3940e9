// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <memory>
#include <string_view>

#include "quakemesh/core.hpp"
#include "quakemesh/detection/params.hpp"
#include "quakemesh/expected.hpp"

namespace quakemesh::detection {

inline constexpr double kDegenerateFloorG = 1e-9;

struct DetectionResult {
  NodeId probe_id;
  SignalWindow window;
  bool triggered = false;
  double score = 0.0;  // z value or STA/LTA ratio
};

enum class DetectError { degenerate_baseline };

using Detection = Expected<DetectionResult, DetectError>;

/// Largest |magnitude - mean| / std over the window.
Detection zscore_detect(const SignalWindow& window, double baseline_mean, double baseline_std,
                        double threshold_z);

/// Mean |magnitude - 1 g| over the trailing `sta_seconds` divided by the same
/// mean over the trailing `lta_seconds`, both measured back from the window end.
Detection sta_lta_detect(const SignalWindow& window, double sta_seconds, double lta_seconds,
                         double threshold_ratio);

/// Pluggable per-probe detection algorithm. One instance per probe buffer.
class DetectionAlgorithm {
 public:
  virtual ~DetectionAlgorithm() = default;
  virtual Detection evaluate(const SignalWindow& window) = 0;
  virtual double threshold() const noexcept = 0;
  virtual std::string_view name() const noexcept = 0;
};

/// Pooled mean/std of magnitudes over recent non-triggered windows.
class BaselineEstimator {
 public:
  explicit BaselineEstimator(TimeMs horizon_ms) : horizon_ms_(horizon_ms) {}

  void add(const SignalWindow& window);
  void evict_before(TimeMs cutoff_ms);
  void clear() { parts_.clear(); }
  bool empty() const noexcept { return parts_.empty(); }

  double mean() const noexcept;
  double stddev() const noexcept;  // population

  TimeMs horizon_ms() const noexcept { return horizon_ms_; }

 private:
  struct Part {
    TimeMs end_ms;
    double n;
    double mean;
    double m2;
  };
  TimeMs horizon_ms_;
  std::deque<Part> parts_;
};

class ZScoreDetector final : public DetectionAlgorithm {
 public:
  ZScoreDetector(double threshold_z, TimeMs baseline_horizon_ms)
      : threshold_(threshold_z), baseline_(baseline_horizon_ms) {}

  Detection evaluate(const SignalWindow& window) override;
  double threshold() const noexcept override { return threshold_; }
  std::string_view name() const noexcept override { return "zscore"; }

  const BaselineEstimator& baseline() const noexcept { return baseline_; }

 private:
  double threshold_;
  BaselineEstimator baseline_;
};

class StaLtaDetector final : public DetectionAlgorithm {
 public:
  StaLtaDetector(double sta_seconds, double lta_seconds, double threshold_ratio)
      : sta_(sta_seconds), lta_(lta_seconds), threshold_(threshold_ratio) {}

  Detection evaluate(const SignalWindow& window) override {
    return sta_lta_detect(window, sta_, lta_, threshold_);
  }
  double threshold() const noexcept override { return threshold_; }
  std::string_view name() const noexcept override { return "sta_lta"; }

 private:
  double sta_;
  double lta_;
  double threshold_;
};

std::unique_ptr<DetectionAlgorithm> make_algorithm(const DetectorParams& params);

}  // namespace quakemesh::detection
