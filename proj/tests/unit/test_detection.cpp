// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "quakemesh/detection/algorithms.hpp"
#include "quakemesh/detection/pipeline.hpp"
#include "quakemesh/detection/ring_buffer.hpp"
#include "quakemesh/sim/synthetic.hpp"

using namespace quakemesh;
using namespace quakemesh::detection;

namespace {

SignalWindow rest_window(TimeMs start, std::size_t n = 200) {
  SignalWindow w{NodeId("p"), {}, start, start + static_cast<TimeMs>(n) * 10};
  for (std::size_t i = 0; i < n; ++i) w.samples.push_back({start + static_cast<TimeMs>(i) * 10, 0, 0, 1});
  return w;
}

/// Streams a source into a pipeline and ticks on the usual schedule.
struct Stream {
  DetectorParams params;
  DetectionPipeline pipeline;
  NodeId probe{"p"};
  TimeMs t = 0;
  TimeMs next_tick;

  explicit Stream(DetectorParams p) : params(p), pipeline(p, {}), next_tick(p.window_ms - 10) {
    pipeline.add_probe(probe);
  }

  template <class Source>
  std::vector<TickReport> run_until(Source& src, TimeMs end) {
    std::vector<TickReport> out;
    for (; t <= end; t += 10) {
      auto s = src.sample(t);
      pipeline.push(probe, std::span(&s, 1));
      if (t == next_tick) {
        out.push_back(pipeline.tick(t));
        next_tick += params.slide_ms;
      }
    }
    return out;
  }
};

}  // namespace

TEST_CASE("default parameters") {
  DetectorParams p;
  CHECK(p.window_samples() == 200);
  CHECK(p.buffer_capacity() == 400);
  CHECK(p.validate().empty());
  CHECK(p.threshold_z == 3.0);
}

TEST_CASE("parameter validation") {
  DetectorParams p;
  p.algorithm = Algorithm::sta_lta;
  p.threshold_ratio = 4.0;  // unreachable: the ratio cannot exceed lta/sta
  CHECK_FALSE(p.validate().empty());
  p = {};
  p.slide_ms = 3000;
  CHECK_FALSE(p.validate().empty());
  p = {};
  p.sample_rate_hz = 0;
  CHECK_FALSE(p.validate().empty());
  Algorithm a{};
  CHECK(parse_algorithm("sta_lta", a));
  CHECK(a == Algorithm::sta_lta);
  CHECK_FALSE(parse_algorithm("crnn", a));
}

TEST_CASE("ring buffer evicts oldest and rejects bad samples") {
  RingBuffer rb(NodeId("p"), 3);
  for (TimeMs t = 0; t < 5; ++t) rb.push({t * 10, 0, 0, 1});
  CHECK(rb.size() == 3);
  CHECK(rb.at(0).timestamp_ms == 20);
  CHECK(rb.newest_timestamp() == 40);
  auto st = rb.push(AccelSample{30, 0, 0, 1});
  CHECK(st.rejected == 1);
  st = rb.push(AccelSample{50, NAN, 0, 1});
  CHECK(st.rejected == 1);
  CHECK(rb.total_rejected() == 2);
  CHECK(rb.size() == 3);
}

TEST_CASE("ring buffer holds the last accepted samples (property)") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto cap = static_cast<std::size_t>(qmtest::uniform_int(rng, 1, 50));
    RingBuffer rb(NodeId("p"), cap);
    std::vector<AccelSample> accepted;
    TimeMs t = 0;
    for (int i = qmtest::uniform_int(rng, 0, 200); i > 0; --i) {
      t += qmtest::uniform_int(rng, -5, 20);
      AccelSample s{t, qmtest::uniform(rng, -1, 1), 0, 1};
      const bool ok = accepted.empty() || t >= accepted.back().timestamp_ms;
      rb.push(s);
      if (ok) accepted.push_back(s);
      else t = accepted.back().timestamp_ms;
    }
    const auto n = std::min(cap, accepted.size());
    const std::vector<AccelSample> expect(accepted.end() - static_cast<std::ptrdiff_t>(n), accepted.end());
    CHECK(rb.snapshot() == expect);
  }
}

TEST_CASE("zscore on a constructed spike") {
  auto w = rest_window(0);
  w.samples[100].z = 1.0 + 5e-3;
  auto r = zscore_detect(w, 1.0, 1e-3, 3.0);
  REQUIRE(r.has_value());
  CHECK(r->score == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(r->triggered);
  r = zscore_detect(w, 1.0, 1e-3, 5.5);
  CHECK_FALSE(r->triggered);
  // Strictly above the threshold.
  w.samples[100].z = 1.0 + 3e-3;
  CHECK_FALSE(zscore_detect(w, 1.0, 1e-3, 3.0 + 1e-9)->triggered);
  CHECK(zscore_detect(w, 1.0, 0.0, 3.0).error() == DetectError::degenerate_baseline);
}

// Deviation rising linearly with sample index: STA averages indices 150..199
// and LTA 0..199, so the ratio is 174.5 / 99.5.
TEST_CASE("sta/lta on a straight-line deviation") {
  auto w = rest_window(0);
  for (std::size_t i = 0; i < 200; ++i) w.samples[i].z = 1.0 + 1e-4 * static_cast<double>(i);
  auto r = sta_lta_detect(w, 0.5, 2.0, 1.5);
  REQUIRE(r.has_value());
  CHECK(r->score == doctest::Approx(349.0 / 199.0).epsilon(1e-9));
  CHECK(r->triggered);
  CHECK(sta_lta_detect(rest_window(0), 0.5, 2.0, 2.5).error() == DetectError::degenerate_baseline);
}

TEST_CASE("sta/lta ratio never exceeds lta/sta (property)") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    auto w = qmtest::random_window(rng, 200);
    w.window_end_ms = w.window_start_ms + 2000;
    auto r = sta_lta_detect(w, 0.5, 2.0, 2.5);
    if (r) CHECK(r->score <= 4.0 + 1e-9);
  }
}

TEST_CASE("zscore detector seeds, then flags a burst") {
  ZScoreDetector det(3.0, 60000);
  sim::SyntheticSource src(3, 1e-3, {});
  auto noise_window = [&](TimeMs start) {
    SignalWindow w{NodeId("p"), {}, start, start + 2000};
    for (int i = 0; i < 200; ++i) w.samples.push_back(src.sample(start + i * 10));
    return w;
  };
  auto first = det.evaluate(noise_window(0));
  REQUIRE(first.has_value());
  CHECK_FALSE(det.baseline().empty());
  auto w = noise_window(2000);
  w.samples[50].z += 0.02;
  auto r = det.evaluate(w);
  REQUIRE(r.has_value());
  CHECK(r->triggered);
  CHECK(r->score > 15.0);
}

TEST_CASE("zscore detector re-seeds on a degenerate baseline") {
  ZScoreDetector det(3.0, 60000);
  CHECK(det.evaluate(rest_window(0)).error() == DetectError::degenerate_baseline);
  CHECK(det.evaluate(rest_window(1000)).error() == DetectError::degenerate_baseline);
}

TEST_CASE("quorum policies") {
  auto result = [](const char* probe, bool trig) {
    return DetectionResult{NodeId(probe), {NodeId(probe), {}, 0, 0}, trig, 0.0};
  };
  std::vector<DetectionResult> rs{result("a", true), result("a", true), result("b", false), result("c", true)};
  CHECK(evaluate_quorum(rs, {QuorumPolicy::Mode::any, 2000}, 3));
  CHECK(evaluate_quorum(rs, {QuorumPolicy::Mode::majority, 2000}, 3));
  CHECK_FALSE(evaluate_quorum(rs, {QuorumPolicy::Mode::majority, 2000}, 4));  // 2 of 4 is not a majority
  CHECK_FALSE(evaluate_quorum(rs, {QuorumPolicy::Mode::all, 2000}, 3));
  CHECK(evaluate_quorum(rs, {QuorumPolicy::Mode::all, 2000}, 2));
  CHECK_FALSE(evaluate_quorum({}, {QuorumPolicy::Mode::any, 2000}, 3));
}

TEST_CASE("window geometry on a seeded stream") {
  DetectorParams p;
  Stream s(p);
  sim::SyntheticSource src(42, 1e-3, {});
  const auto reports = s.run_until(src, 60000 - 10);
  std::vector<SignalWindow> windows;
  for (const auto& r : reports)
    for (const auto& res : r.results) windows.push_back(res.window);
  REQUIRE(windows.size() == 59);
  std::map<TimeMs, int> appearances;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    CHECK(check_window(w, 200, 2000).empty());
    for (const auto& smp : w.samples) ++appearances[smp.timestamp_ms];
    if (i > 0) {
      const auto& prev = windows[i - 1];
      CHECK(std::equal(prev.samples.begin() + 100, prev.samples.end(), w.samples.begin()));
      CHECK(w.window_start_ms - prev.window_start_ms == 1000);
    }
  }
  // After the first window every sample sits in exactly two windows, up to
  // the last slide that has no successor yet.
  for (const auto& [t, n] : appearances)
    if (t >= 1000 && t < 58000) CHECK(n == 2);
}

TEST_CASE("windows are translation covariant") {
  auto w = rest_window(0);
  std::mt19937_64 rng(9);
  for (auto& smp : w.samples) smp.z += qmtest::uniform(rng, -1e-3, 1e-3);
  auto shifted = w;
  shifted.window_start_ms += 123456;
  shifted.window_end_ms += 123456;
  for (auto& smp : shifted.samples) smp.timestamp_ms += 123456;
  CHECK(zscore_detect(w, 1.0, 1e-3, 3)->score == zscore_detect(shifted, 1.0, 1e-3, 3)->score);
  CHECK(sta_lta_detect(w, 0.5, 2, 2.5)->score == sta_lta_detect(shifted, 0.5, 2, 2.5)->score);
}

TEST_CASE("stale windows are skipped") {
  DetectorParams p;
  DetectionPipeline pipe(p, {});
  NodeId probe("p");
  for (TimeMs t = 0; t < 2000; t += 10) {
    AccelSample s{t, 0, 0, 1.0 + 1e-3 * std::sin(static_cast<double>(t))};
    pipe.push(probe, std::span(&s, 1));
  }
  auto a = pipe.tick(1990);
  CHECK(a.results.size() + a.degenerate == 1);
  auto b = pipe.tick(2990);
  CHECK(b.stale == 1);
  CHECK(b.results.empty());
}

TEST_CASE("too few samples are reported as insufficient") {
  DetectionPipeline pipe(DetectorParams{}, {});
  NodeId probe("p");
  for (TimeMs t = 0; t < 500; t += 10) {
    AccelSample s{t, 0, 0, 1};
    pipe.push(probe, std::span(&s, 1));
  }
  auto r = pipe.tick(490);
  CHECK(r.insufficient == 1);
  CHECK_FALSE(r.alert.has_value());
}

// Frozen from tests/oracles/zscore_mc_oracle.py (threshold 3, 10,000 windows).
constexpr double kOracleFalseTriggerRate = 0.4138;

TEST_CASE("runtime false-trigger rate matches the Monte-Carlo oracle") {
  DetectorParams p;
  Stream s(p);
  sim::SyntheticSource src(20240601, 1e-3, {});
  std::size_t windows = 0, triggers = 0;
  while (windows < 10000) {
    for (const auto& r : s.run_until(src, s.t + 999)) {
      windows += r.results.size();
      for (const auto& res : r.results) triggers += res.triggered;
    }
  }
  const double rate = static_cast<double>(triggers) / static_cast<double>(windows);
  MESSAGE("false-trigger rate " << rate);
  CHECK(std::abs(rate - kOracleFalseTriggerRate) / kOracleFalseTriggerRate <= 0.20);
}

TEST_CASE("burst at 10x noise triggers within two slides of onset") {
  DetectorParams p;
  for (TimeMs onset : {20000, 20370, 20990, 31505}) {
    Stream s(p);
    sim::BurstSchedule b{NodeId("p"), onset, onset + 5000, 1e-2, 5.0};
    sim::SyntheticSource src(onset, 1e-3, {b});
    bool hit = false;
    for (const auto& r : s.run_until(src, onset + 2 * p.slide_ms))
      for (const auto& res : r.results)
        if (res.triggered && res.window.window_end_ms > onset) hit = true;
    CHECK_MESSAGE(hit, "onset " << onset);
  }
}

TEST_CASE("pipeline alert carries the strongest window and clears") {
  DetectorParams p;
  DetectionPipeline pipe(p, {QuorumPolicy::Mode::any, 2000});
  sim::SyntheticSource quiet(1, 1e-3, {}), loud(2, 1e-3, {{NodeId("b"), 2500, 7500, 0.05, 5.0}});
  NodeId a("a"), b("b");
  std::optional<LocalAlert> alert;
  for (TimeMs t = 0; t <= 4990; t += 10) {
    auto sa = quiet.sample(t), sb = loud.sample(t);
    pipe.push(a, std::span(&sa, 1));
    pipe.push(b, std::span(&sb, 1));
    if (t >= 1990 && (t - 1990) % 1000 == 0) {
      auto r = pipe.tick(t);
      if (r.alert && !alert) alert = r.alert;
    }
  }
  REQUIRE(alert.has_value());
  CHECK(alert->window.probe_id == b);
  CHECK(std::find(alert->triggered_probes.begin(), alert->triggered_probes.end(), b) !=
        alert->triggered_probes.end());
}
