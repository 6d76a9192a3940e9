// SPDX-License-Identifier: Apache-2.0
// quakemesh: scenario runner, detector micro-benchmark and sample-file replay.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "quakemesh/cli/commands.hpp"

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("quakemesh");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("QUAKEMESH_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace quakemesh;
  configure_logging();

  CLI::App app{"quakemesh: decentralized earthquake early warning simulator"};
  app.require_subcommand(1);

  cli::RunOptions run_opts;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run a scenario file for each of its seeds");
  run->add_option("file", run_opts.scenario, "Scenario file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Run this seed instead of the file's seed list");
  run->add_option("--out", run_opts.out_dir, "Report directory")->capture_default_str();
  run->add_flag("--trace", run_opts.trace, "Also write the transmission audit as NDJSON");

  cli::BenchOptions bench_opts;
  std::string bench_algo = "zscore";
  auto* bench = app.add_subcommand("bench", "Time one detector evaluation over 200-sample windows");
  bench->add_option("--algo", bench_algo, "zscore | sta_lta")->capture_default_str();
  bench->add_option("--reps", bench_opts.reps, "Repetitions")->capture_default_str();
  bench->add_option("--seed", bench_opts.seed, "Window generator seed")->capture_default_str();
  bench->add_option("--dump", bench_opts.dump, "Write raw per-rep timings (ns) here");

  cli::ReplayOptions replay_opts;
  std::string replay_algo = "zscore";
  auto* replay = app.add_subcommand("replay", "Stream a timestamp_ms,x,y,z file through one detector");
  replay->add_option("file", replay_opts.file, "Sample file")->required();
  replay->add_option("--algo", replay_algo, "zscore | sta_lta")->capture_default_str();
  replay->add_option("--threshold-z", replay_opts.params.threshold_z)->capture_default_str();
  replay->add_option("--threshold-ratio", replay_opts.params.threshold_ratio)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitInvalid;
  }

  if (run->parsed()) {
    if (*seed_opt) run_opts.seed = seed;
    return cli::run(run_opts, std::cout, std::cerr);
  }
  if (bench->parsed()) {
    if (!detection::parse_algorithm(bench_algo, bench_opts.algorithm)) {
      std::cerr << "error: unknown algorithm '" << bench_algo << "'\n";
      return cli::kExitInvalid;
    }
    return cli::bench(bench_opts, std::cout, std::cerr);
  }
  if (!detection::parse_algorithm(replay_algo, replay_opts.params.algorithm)) {
    std::cerr << "error: unknown algorithm '" << replay_algo << "'\n";
    return cli::kExitInvalid;
  }
  return cli::replay(replay_opts, std::cout, std::cerr);
}
