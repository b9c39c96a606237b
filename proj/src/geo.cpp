// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/geo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace geodecoder::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

bool is_valid(const GeoPoint& p) noexcept {
  return std::isfinite(p.lng) && std::isfinite(p.lat) && p.lng >= -180.0 && p.lng <= 180.0 &&
         p.lat >= -90.0 && p.lat <= 90.0;
}

void validate(const Viewport& vp) {
  if (vp.scale < kMinScale || vp.scale > kMaxScale) {
    throw std::invalid_argument("viewport scale " + std::to_string(vp.scale) + " outside [3, 18]");
  }
  if (vp.width_px <= 0 || vp.height_px <= 0) {
    throw std::invalid_argument("viewport size must be positive");
  }
  if (!is_valid(vp.center)) throw std::invalid_argument("viewport center is not a valid lng/lat");
}

double meters_per_pixel(int scale) {
  if (scale < kMinScale || scale > kMaxScale) {
    throw std::invalid_argument("scale " + std::to_string(scale) + " outside [3, 18]");
  }
  return 204800.0 / std::ldexp(1.0, scale);
}

PixelCoord project(const GeoPoint& p, const Viewport& vp) {
  const double mpp = meters_per_pixel(vp.scale);
  const double kx = kMetersPerDegreeLat * std::cos(vp.center.lat * kDegToRad) / mpp;
  const double ky = kMetersPerDegreeLat / mpp;
  return {vp.width_px / 2.0 + (p.lng - vp.center.lng) * kx,
          vp.height_px / 2.0 - (p.lat - vp.center.lat) * ky};
}

GeoPoint unproject(const PixelCoord& px, const Viewport& vp) {
  const double mpp = meters_per_pixel(vp.scale);
  const double kx = kMetersPerDegreeLat * std::cos(vp.center.lat * kDegToRad) / mpp;
  const double ky = kMetersPerDegreeLat / mpp;
  return {vp.center.lng + (px.x - vp.width_px / 2.0) / kx,
          vp.center.lat - (px.y - vp.height_px / 2.0) / ky};
}

double haversine(const GeoPoint& a, const GeoPoint& b) {
  const double p1 = a.lat * kDegToRad;
  const double p2 = b.lat * kDegToRad;
  const double dp = p2 - p1;
  const double dl = (b.lng - a.lng) * kDegToRad;
  const double s1 = std::sin(dp / 2.0);
  const double s2 = std::sin(dl / 2.0);
  double h = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
  h = std::min(1.0, h);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 v) { return std::hypot(v.x, v.y); }

LocalFrame::LocalFrame(GeoPoint origin)
    : origin_(origin), meters_per_deg_lng_(kMetersPerDegreeLat * std::cos(origin.lat * kDegToRad)) {}

Vec2 LocalFrame::to_local(const GeoPoint& p) const {
  return {(p.lng - origin_.lng) * meters_per_deg_lng_, (p.lat - origin_.lat) * kMetersPerDegreeLat};
}

GeoPoint LocalFrame::to_geo(const Vec2& v) const {
  return {origin_.lng + v.x / meters_per_deg_lng_, origin_.lat + v.y / kMetersPerDegreeLat};
}

SegmentProjection project_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  const Vec2 c = a + ab * t;
  return {norm(p - c), t, c};
}

bool point_in_ring(Vec2 p, const std::vector<Vec2>& ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = ring[i];
    const Vec2 b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double signed_area(const std::vector<Vec2>& ring) {
  double s = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) s += cross(ring[i], ring[(i + 1) % n]);
  return s / 2.0;
}

Vec2 centroid(const std::vector<Vec2>& ring) {
  const double a = signed_area(ring);
  const std::size_t n = ring.size();
  if (a == 0.0) {
    Vec2 m;
    for (auto v : ring) m = m + v;
    return m * (1.0 / static_cast<double>(n));
  }
  double cx = 0.0;
  double cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = ring[i];
    const Vec2 q = ring[(i + 1) % n];
    const double c = cross(p, q);
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

bool is_simple(const std::vector<Vec2>& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

}  // namespace geodecoder::geo
