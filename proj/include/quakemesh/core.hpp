// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace quakemesh {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Simulated clock reading in milliseconds. Never wall-clock.
using TimeMs = std::int64_t;

/// Opaque identifier of a probe, detector or authority instance.
class NodeId {
 public:
  explicit NodeId(std::string value);

  const std::string& str() const noexcept { return value_; }

  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;

 private:
  std::string value_;
};

/// WGS-84 coordinate pair on a spherical Earth.
class GeoLocation {
 public:
  /// Throws std::invalid_argument on out-of-range or non-finite input.
  GeoLocation(double latitude_deg, double longitude_deg);

  double latitude_deg() const noexcept { return lat_; }
  double longitude_deg() const noexcept { return lon_; }

  bool operator==(const GeoLocation&) const = default;

  /// Point reached by moving `north_km` then `east_km` on the sphere from here
  /// (small-offset approximation; used to lay out synthetic topologies).
  GeoLocation offset_km(double north_km, double east_km) const;

 private:
  double lat_;
  double lon_;
};

struct AccelSample {
  TimeMs timestamp_ms = 0;
  double x = 0.0;  // g
  double y = 0.0;
  double z = 0.0;

  bool operator==(const AccelSample&) const = default;
  bool finite() const noexcept;
};

/// A contiguous run of samples from one probe, handed to a detection algorithm.
struct SignalWindow {
  NodeId probe_id;
  std::vector<AccelSample> samples;
  TimeMs window_start_ms = 0;
  TimeMs window_end_ms = 0;

  bool operator==(const SignalWindow&) const = default;
};

/// Checks length, time ordering and span of a window against the given
/// geometry. Returns an empty string when valid, otherwise the violated rule.
std::string check_window(const SignalWindow& w, std::size_t expected_samples, TimeMs expected_span_ms);

/// Great-circle distance in kilometres.
double haversine_distance(const GeoLocation& a, const GeoLocation& b) noexcept;

/// Euclidean norm of the acceleration vector, in g.
double vector_magnitude(const AccelSample& s) noexcept;

}  // namespace quakemesh

template <>
struct std::hash<quakemesh::NodeId> {
  std::size_t operator()(const quakemesh::NodeId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
