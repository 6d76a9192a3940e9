// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/core.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace quakemesh {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

NodeId::NodeId(std::string value) : value_(std::move(value)) {
  if (value_.empty()) throw std::invalid_argument("node id must be non-empty");
}

GeoLocation::GeoLocation(double latitude_deg, double longitude_deg)
    : lat_(latitude_deg), lon_(longitude_deg) {
  if (!std::isfinite(lat_) || !std::isfinite(lon_))
    throw std::invalid_argument("coordinates must be finite");
  if (lat_ < -90.0 || lat_ > 90.0)
    throw std::invalid_argument("latitude out of range [-90, 90]: " + std::to_string(lat_));
  if (lon_ < -180.0 || lon_ > 180.0)
    throw std::invalid_argument("longitude out of range [-180, 180]: " + std::to_string(lon_));
}

GeoLocation GeoLocation::offset_km(double north_km, double east_km) const {
  const double km_per_deg = kEarthRadiusKm * kDegToRad;
  double lat = lat_ + north_km / km_per_deg;
  double lon = lon_ + east_km / (km_per_deg * std::cos(lat_ * kDegToRad));
  if (lon > 180.0) lon -= 360.0;
  if (lon < -180.0) lon += 360.0;
  return GeoLocation(lat, lon);
}

bool AccelSample::finite() const noexcept {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

std::string check_window(const SignalWindow& w, std::size_t expected_samples, TimeMs expected_span_ms) {
  if (w.samples.size() != expected_samples)
    return "window has " + std::to_string(w.samples.size()) + " samples, expected " +
           std::to_string(expected_samples);
  if (w.window_end_ms - w.window_start_ms != expected_span_ms) return "window span mismatch";
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const auto& s = w.samples[i];
    if (!s.finite()) return "non-finite sample";
    if (i > 0 && s.timestamp_ms < w.samples[i - 1].timestamp_ms) return "samples not time-ordered";
    if (s.timestamp_ms < w.window_start_ms || s.timestamp_ms >= w.window_end_ms)
      return "sample outside window bounds";
  }
  return {};
}

double haversine_distance(const GeoLocation& a, const GeoLocation& b) noexcept {
  const double p1 = a.latitude_deg() * kDegToRad;
  const double p2 = b.latitude_deg() * kDegToRad;
  const double dp = p2 - p1;
  const double dl = (b.longitude_deg() - a.longitude_deg()) * kDegToRad;
  const double sp = std::sin(dp / 2.0);
  const double sl = std::sin(dl / 2.0);
  double h = sp * sp + std::cos(p1) * std::cos(p2) * sl * sl;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double vector_magnitude(const AccelSample& s) noexcept {
  return std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z);
}

}  // namespace quakemesh
