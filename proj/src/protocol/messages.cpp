// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/protocol/messages.hpp"

#include <array>

namespace quakemesh::protocol {

namespace {
constexpr std::array<std::string_view, kKindCount> kKindNames = {
    "ProbeHello", "SampleBatch", "Register", "RegisterAck", "ProbeQuery",
    "ProbeAssign", "Eew",        "EewLog",   "Ping",        "Pong",
};
}

std::string_view to_string(Kind k) noexcept {
  const auto i = static_cast<std::size_t>(k);
  return i < kKindNames.size() ? kKindNames[i] : "?";
}

std::optional<Kind> parse_kind(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<Kind>(i);
  return std::nullopt;
}

}  // namespace quakemesh::protocol
