// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "quakemesh/expected.hpp"
#include "quakemesh/sim/scenario.hpp"

namespace quakemesh::cli {

inline constexpr std::string_view kScenarioSchema = "quakemesh-scenario/1";

struct FileDiagnostic {
  int line = 0;  // 1-based, 0 when unknown
  std::string field;
  std::string message;
};

std::string format(const FileDiagnostic& d, std::string_view file);

/// Parses and fully validates a scenario document. Structural problems and
/// semantic ones (duplicate ids, unknown references, bad ranges) are all
/// reported, each with the line it came from where possible.
Expected<sim::Scenario, std::vector<FileDiagnostic>> parse_scenario(std::string_view text);
Expected<sim::Scenario, std::vector<FileDiagnostic>> load_scenario(const std::filesystem::path& path);

}  // namespace quakemesh::cli
