// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/cli/commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>

#include "quakemesh/cli/scenario_file.hpp"
#include "quakemesh/detection/pipeline.hpp"
#include "quakemesh/sim/simulator.hpp"

namespace quakemesh::cli {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

bool write_file(const std::filesystem::path& path, const std::string& text, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    err << "error: cannot write " << path.string() << "\n";
    return false;
  }
  return true;
}

std::string alerts_csv(const sim::SimReport& r) {
  std::map<std::string, TimeMs> origin_time;
  for (const auto& o : r.origins) origin_time[o.message_id] = o.time_ms;
  std::string out = "node,kind,message_id,time_ms,latency_ms,hops\n";
  for (const auto& a : r.alerts) {
    auto it = origin_time.find(a.message_id);
    const auto latency = it == origin_time.end() ? std::string() : std::to_string(a.time_ms - it->second);
    out += a.node.str() + "," + a.kind + "," + a.message_id + "," + std::to_string(a.time_ms) + "," + latency + "," +
           std::to_string(a.hop_count) + "\n";
  }
  return out;
}

constexpr TimeMs kHistogramBinMs = 10;

}  // namespace

std::string report_file_name(const std::string& scenario, std::uint64_t seed) {
  return scenario + "-seed" + std::to_string(seed) + ".report.json";
}

int run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  auto loaded = load_scenario(opts.scenario);
  if (!loaded) {
    for (const auto& d : loaded.error()) err << format(d, opts.scenario.string()) << "\n";
    return kExitInvalid;
  }
  const sim::Scenario& s = *loaded;
  const auto seeds = opts.seed ? std::vector<std::uint64_t>{*opts.seed} : s.seeds;

  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) {
    err << "error: cannot create " << opts.out_dir.string() << ": " << ec.message() << "\n";
    return kExitInvalid;
  }

  out << "scenario " << s.name << "\n";
  out << pad("seed", 6) << pad("coverage", 10) << pad("alerted", 9) << pad("origins", 9) << pad("p50_ms", 8)
      << pad("p95_ms", 8) << pad("dups", 7) << pad("violations", 12) << "  audit\n";

  bool all_passed = true;
  std::map<TimeMs, std::size_t> histogram;
  for (auto seed : seeds) {
    spdlog::info("running {} seed {}", s.name, seed);
    sim::Simulator sim(s, seed);
    const auto report = sim.run();
    const auto& m = report.metrics;
    const auto& a = report.audit;
    const std::size_t violations = a.privacy_violations + a.duplicate_alerts + a.duplicate_relays +
                                   a.out_of_range_relays + a.hop_limit_violations + a.hop_increment_violations +
                                   a.latency_bound_violations + a.threshold_inconsistencies;
    all_passed = all_passed && a.passed();

    const auto stem = s.name + "-seed" + std::to_string(seed);
    if (!write_file(opts.out_dir / report_file_name(s.name, seed), sim::to_text(report), err)) return kExitInvalid;
    if (!write_file(opts.out_dir / (stem + ".alerts.csv"), alerts_csv(report), err)) return kExitInvalid;
    if (opts.trace && !write_file(opts.out_dir / (stem + ".trace.ndjson"), sim::trace_lines(report), err))
      return kExitInvalid;

    std::map<std::string, TimeMs> origin_time;
    for (const auto& o : report.origins) origin_time[o.message_id] = o.time_ms;
    for (const auto& al : report.alerts)
      if (auto it = origin_time.find(al.message_id); it != origin_time.end() && al.kind != "local_detection")
        ++histogram[(al.time_ms - it->second) / kHistogramBinMs * kHistogramBinMs];

    out << pad(std::to_string(seed), 6) << pad(fixed(m.coverage, 3), 10)
        << pad(std::to_string(m.detectors_alerted) + "/" + std::to_string(m.detectors_live), 9)
        << pad(std::to_string(m.distinct_origins), 9) << pad(fixed(m.latency_median_ms, 0), 8)
        << pad(fixed(m.latency_p95_ms, 0), 8) << pad(std::to_string(m.duplicate_deliveries), 7)
        << pad(std::to_string(violations), 12) << "  " << (a.passed() ? "pass" : "FAIL") << "\n";
  }

  std::string hist = "latency_ms_bin,count\n";
  for (const auto& [bin, count] : histogram) hist += std::to_string(bin) + "," + std::to_string(count) + "\n";
  if (!write_file(opts.out_dir / (s.name + ".latency_hist.csv"), hist, err)) return kExitInvalid;

  return all_passed ? kExitOk : kExitAudit;
}

BenchStats summarize(std::span<const std::int64_t> ns) {
  BenchStats st;
  st.n = ns.size();
  if (ns.empty()) return st;
  long double sum = 0;
  for (auto v : ns) sum += v;
  st.mean_ns = static_cast<double>(sum / ns.size());
  long double sq = 0;
  for (auto v : ns) sq += (v - static_cast<long double>(st.mean_ns)) * (v - static_cast<long double>(st.mean_ns));
  st.stddev_ns = ns.size() > 1 ? static_cast<double>(std::sqrt(sq / ns.size())) : 0.0;
  std::vector<std::int64_t> sorted(ns.begin(), ns.end());
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(sorted.size())));
  st.p90_ns = sorted[std::max<std::size_t>(rank, 1) - 1];
  return st;
}

int bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.reps < 1) {
    err << "error: --reps must be >= 1\n";
    return kExitInvalid;
  }
  detection::DetectorParams params;
  params.algorithm = opts.algorithm;
  const auto n = params.window_samples();
  const auto period = static_cast<TimeMs>(std::llround(1000.0 / params.sample_rate_hz));

  // Windows are generated up front so only evaluate() is timed.
  constexpr std::size_t kWarmup = 10;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> noise(0.0, 1e-3);
  std::vector<SignalWindow> windows;
  windows.reserve(opts.reps + kWarmup);
  for (std::size_t w = 0; w < opts.reps + kWarmup; ++w) {
    SignalWindow win{NodeId("bench"), {}, static_cast<TimeMs>(w) * params.slide_ms,
                     static_cast<TimeMs>(w) * params.slide_ms + params.window_ms};
    win.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      win.samples.push_back({win.window_start_ms + static_cast<TimeMs>(i) * period, noise(rng), noise(rng),
                             1.0 + noise(rng)});
    windows.push_back(std::move(win));
  }

  auto algo = detection::make_algorithm(params);
  std::size_t triggers = 0;
  for (std::size_t w = 0; w < kWarmup; ++w) (void)algo->evaluate(windows[w]);
  std::vector<std::int64_t> ns;
  ns.reserve(opts.reps);
  for (std::size_t w = kWarmup; w < windows.size(); ++w) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = algo->evaluate(windows[w]);
    const auto t1 = std::chrono::steady_clock::now();
    if (r && r->triggered) ++triggers;
    ns.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  }

  const auto st = summarize(ns);
  out << "algorithm " << detection::to_string(opts.algorithm) << ", window " << n << " samples, " << st.n
      << " reps\n";
  out << pad("mean_ms", 12) << pad("sigma_ms", 12) << pad("p90_ms", 12) << "\n";
  out << pad(fixed(st.mean_ns / 1e6, 6), 12) << pad(fixed(st.stddev_ns / 1e6, 6), 12)
      << pad(fixed(static_cast<double>(st.p90_ns) / 1e6, 6), 12) << "\n";
  spdlog::debug("{} of {} windows triggered", triggers, st.n);

  if (!opts.dump.empty()) {
    std::string raw = "# " + std::string(detection::to_string(opts.algorithm)) + " evaluate() wall time, ns\n";
    for (auto v : ns) raw += std::to_string(v) + "\n";
    if (!write_file(opts.dump, raw, err)) return kExitInvalid;
    out << "raw timings: " << opts.dump.string() << "\n";
  }
  return kExitOk;
}

Expected<std::vector<AccelSample>, SampleFileError> parse_samples(std::istream& in) {
  std::vector<AccelSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 4)
      return unexpected(SampleFileError{lineno, "expected 4 comma-separated fields, got " +
                                                    std::to_string(fields.size())});
    auto trim = [](std::string_view f) {
      while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
      while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
      return f;
    };
    AccelSample s{};
    auto f0 = trim(fields[0]);
    auto [p0, e0] = std::from_chars(f0.data(), f0.data() + f0.size(), s.timestamp_ms);
    if (e0 != std::errc{} || p0 != f0.data() + f0.size())
      return unexpected(SampleFileError{lineno, "bad timestamp '" + std::string(f0) + "'"});
    double* axes[] = {&s.x, &s.y, &s.z};
    for (int i = 0; i < 3; ++i) {
      auto f = trim(fields[static_cast<std::size_t>(i) + 1]);
      auto [p, e] = std::from_chars(f.data(), f.data() + f.size(), *axes[i]);
      if (e != std::errc{} || p != f.data() + f.size() || !std::isfinite(*axes[i]))
        return unexpected(SampleFileError{lineno, "bad value '" + std::string(f) + "'"});
    }
    out.push_back(s);
  }
  return out;
}

std::vector<detection::DetectionResult> replay_samples(std::span<const AccelSample> samples,
                                                       const detection::DetectorParams& params) {
  std::vector<detection::DetectionResult> results;
  if (samples.empty()) return results;
  const NodeId probe("replay");
  detection::DetectionPipeline pipeline(params, {});
  pipeline.add_probe(probe);
  const auto period = static_cast<TimeMs>(std::llround(1000.0 / params.sample_rate_hz));
  TimeMs next_tick =
      samples.front().timestamp_ms + static_cast<TimeMs>(params.window_samples() - 1) * period;
  auto tick = [&] {
    auto rep = pipeline.tick(next_tick);
    results.insert(results.end(), rep.results.begin(), rep.results.end());
    next_tick += params.slide_ms;
  };
  for (const auto& s : samples) {
    while (s.timestamp_ms > next_tick) tick();
    pipeline.push(probe, std::span(&s, 1));
  }
  while (next_tick <= samples.back().timestamp_ms) tick();
  return results;
}

int replay(const ReplayOptions& opts, std::ostream& out, std::ostream& err) {
  if (auto e = opts.params.validate(); !e.empty()) {
    err << "error: " << e << "\n";
    return kExitInvalid;
  }
  std::ifstream in(opts.file);
  if (!in) {
    err << opts.file.string() << ": cannot open file\n";
    return kExitInvalid;
  }
  auto samples = parse_samples(in);
  if (!samples) {
    err << opts.file.string() << ":" << samples.error().line << ": " << samples.error().message << "\n";
    return kExitInvalid;
  }
  const auto results = replay_samples(*samples, opts.params);
  out << "window_start_ms,window_end_ms,score,triggered\n";
  std::size_t triggers = 0;
  for (const auto& r : results) {
    out << r.window.window_start_ms << "," << r.window.window_end_ms << "," << fixed(r.score, 6) << ","
        << (r.triggered ? 1 : 0) << "\n";
    triggers += r.triggered;
  }
  spdlog::info("{} samples, {} windows, {} triggers", samples->size(), results.size(), triggers);
  return kExitOk;
}

}  // namespace quakemesh::cli
