// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace geodecoder::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kMetersPerDegreeLat = 111'320.0;
inline constexpr int kMinScale = 3;
inline constexpr int kMaxScale = 18;

/// Longitude/latitude in degrees.
struct GeoPoint {
  double lng = 0.0;
  double lat = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p) noexcept;

/// Pixel position measured from the top-left corner of a raster.
struct PixelCoord {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct Viewport {
  GeoPoint center;
  int scale = 11;
  int width_px = 224;
  int height_px = 224;

  friend bool operator==(const Viewport&, const Viewport&) = default;
};

/// Throws std::invalid_argument when the scale or size is out of range.
void validate(const Viewport& vp);

/// 204800 / 2^scale, so scale 11 is exactly 100 m/px.
double meters_per_pixel(int scale);

/// Local equirectangular projection around the viewport center.
PixelCoord project(const GeoPoint& p, const Viewport& vp);
GeoPoint unproject(const PixelCoord& px, const Viewport& vp);

/// Great-circle distance in meters.
double haversine(const GeoPoint& a, const GeoPoint& b);

/// Planar vector in meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
};

double dot(Vec2 a, Vec2 b);
double norm(Vec2 v);

// Metric tangent plane anchored at `origin`: x grows east, y grows north.
// Uses the same constants as `project`, so distances agree with rendering.
class LocalFrame {
 public:
  explicit LocalFrame(GeoPoint origin);

  Vec2 to_local(const GeoPoint& p) const;
  GeoPoint to_geo(const Vec2& v) const;
  const GeoPoint& origin() const { return origin_; }

 private:
  GeoPoint origin_;
  double meters_per_deg_lng_;
};

/// Distance from `p` to segment [a, b] and the clamped projection parameter t in [0, 1].
struct SegmentProjection {
  double distance = 0.0;
  double t = 0.0;
  Vec2 closest;
};
SegmentProjection project_to_segment(Vec2 p, Vec2 a, Vec2 b);

/// Even-odd ray cast. Ring is implicitly closed.
bool point_in_ring(Vec2 p, const std::vector<Vec2>& ring);

/// Signed area (positive for counterclockwise rings).
double signed_area(const std::vector<Vec2>& ring);

Vec2 centroid(const std::vector<Vec2>& ring);

/// True when no two non-adjacent edges intersect.
bool is_simple(const std::vector<Vec2>& ring);

}  // namespace geodecoder::geo
