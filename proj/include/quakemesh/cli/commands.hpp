// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quakemesh/detection/algorithms.hpp"
#include "quakemesh/detection/params.hpp"
#include "quakemesh/expected.hpp"
#include "quakemesh/sim/report.hpp"

namespace quakemesh::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAudit = 1;
inline constexpr int kExitInvalid = 2;

struct RunOptions {
  std::filesystem::path scenario;
  std::filesystem::path out_dir = "reports";
  std::optional<std::uint64_t> seed;
  bool trace = false;  // also write the per-transmission audit lines
};

/// Runs every seed, writes <name>-seed<N>.report.json (plus CSV plot data) and
/// prints a summary table. Exit 0 iff every audit passed.
int run(const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Report file name for a seed.
std::string report_file_name(const std::string& scenario, std::uint64_t seed);

struct BenchOptions {
  detection::Algorithm algorithm = detection::Algorithm::zscore;
  std::size_t reps = 300;
  std::uint64_t seed = 1;
  std::filesystem::path dump;  // raw nanosecond timings, one per line; empty to skip
};

struct BenchStats {
  std::size_t n = 0;
  double mean_ns = 0.0;
  double stddev_ns = 0.0;  // population
  std::int64_t p90_ns = 0;  // nearest rank
};

BenchStats summarize(std::span<const std::int64_t> ns);

/// Times the detector on pre-generated 200-sample windows.
int bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

/// Parses `timestamp_ms,x,y,z` lines; '#' lines and blank lines are skipped.
struct SampleFileError {
  std::size_t line = 0;
  std::string message;
};
Expected<std::vector<AccelSample>, SampleFileError> parse_samples(std::istream& in);

struct ReplayOptions {
  std::filesystem::path file;
  detection::DetectorParams params;
};

/// Streams a sample file through one pipeline and prints every result.
int replay(const ReplayOptions& opts, std::ostream& out, std::ostream& err);
/// Same, for samples already in memory.
std::vector<detection::DetectionResult> replay_samples(std::span<const AccelSample> samples,
                                                       const detection::DetectorParams& params);

}  // namespace quakemesh::cli
