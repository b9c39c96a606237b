// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "geodecoder/geo.hpp"
#include "geodecoder/worldgen.hpp"

namespace geodecoder::render {

using geo::GeoPoint;
using geo::PixelCoord;
using geo::Viewport;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Linear blend `a + (b - a) * t`, rounded half-up per channel.
Rgb blend(Rgb a, Rgb b, double t);

// Row-major RGB8 image.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }
  /// Bounds-checked write; off-raster pixels are ignored.
  void plot(int x, int y, Rgb c) {
    if (in_bounds(x, y)) set(x, y, c);
  }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  /// Adopts raw pixels; throws std::invalid_argument unless size == 3 * width * height.
  static Raster from_pixels(int width, int height, std::vector<std::uint8_t> pixels);

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * 3; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

enum class ElementClass { land, water, green, major_road, minor_road, residential, campus, park, mall, office };

inline constexpr std::array<ElementClass, 10> kAllElementClasses = {
    ElementClass::land,        ElementClass::water,  ElementClass::green, ElementClass::major_road,
    ElementClass::minor_road,  ElementClass::residential, ElementClass::campus, ElementClass::park,
    ElementClass::mall,        ElementClass::office};

/// Human-readable class label, e.g. "green space".
std::string_view element_name(ElementClass c);
ElementClass element_class_from_name(std::string_view name);
ElementClass element_class_of(world::AoiCategory c);

struct Style {
  Rgb background{242, 239, 233};
  Rgb water{170, 211, 223};
  Rgb green{200, 230, 180};
  Rgb major_road{255, 226, 140};
  Rgb minor_road{255, 255, 255};
  // Indexed by world::AoiCategory.
  std::array<Rgb, 5> aoi_fill{Rgb{232, 222, 210}, Rgb{236, 218, 232}, Rgb{208, 236, 196}, Rgb{250, 226, 204},
                              Rgb{222, 222, 238}};
  std::array<Rgb, 5> aoi_outline{Rgb{200, 188, 176}, Rgb{210, 180, 205}, Rgb{160, 208, 150}, Rgb{230, 190, 150},
                                 Rgb{186, 186, 212}};
  bool labels = false;  // text labels are never drawn

  Rgb fill_for(world::AoiCategory c) const { return aoi_fill[static_cast<int>(c)]; }
  Rgb outline_for(world::AoiCategory c) const { return aoi_outline[static_cast<int>(c)]; }
};

/// Every style color, paired with the element it denotes.
std::vector<std::pair<Rgb, ElementClass>> style_palette(const Style& style);
bool colors_distinct(const Style& style);
/// Element under a base-map pixel, recovered from color alone.
std::optional<ElementClass> classify(const Style& style, Rgb c);

inline constexpr int kMinorRoadWidthPx = 2;
inline constexpr int kMajorRoadWidthPx = 4;

/// Throws std::invalid_argument for an invalid or zero-size viewport.
Raster render_base(const world::MapWorld& world, const Viewport& vp, const Style& style = {});

// ---- overlays ---------------------------------------------------------------

enum class MarkerShape { dot, diamond, circle, letter, scanner };

struct Marker {
  std::variant<GeoPoint, PixelCoord> at;
  MarkerShape shape = MarkerShape::dot;
  Rgb color;
  int radius = 3;
  char letter = 'P';         // MarkerShape::letter
  double angle_deg = 0.0;    // MarkerShape::scanner, clockwise from north
};

enum class StrokeStyle { solid, dashed };
struct FlatColor {
  Rgb color;
};
struct TemporalGradient {
  Rgb from;
  Rgb to;
};

struct Path {
  std::vector<GeoPoint> points;
  StrokeStyle style = StrokeStyle::solid;
  std::variant<FlatColor, TemporalGradient> coloring = FlatColor{};
  int width = 2;
};

struct Polygon {
  std::vector<GeoPoint> ring;
  std::optional<Rgb> fill;
  double fill_alpha = 1.0;
  Rgb outline;
};

enum class Colormap { heat };

struct Heatmap {
  std::vector<std::pair<GeoPoint, double>> points;
  double sigma_m = 25.0;
  Colormap colormap = Colormap::heat;
};

using Overlay = std::variant<Marker, Path, Polygon, Heatmap>;

inline constexpr int kDashOnPx = 6;
inline constexpr int kDashOffPx = 4;
inline constexpr double kScannerHalfAngleDeg = 15.0;
inline constexpr int kScannerApexRadiusPx = 2;
inline constexpr double kHeatmapAlpha = 0.6;

/// Throws std::invalid_argument when the overlay violates its invariants.
Raster draw_overlay(Raster raster, const Viewport& vp, const Overlay& overlay);

/// Colormap lookup at one of 256 steps; `step` is clamped to [0, 255].
Rgb colormap_color(Colormap cmap, int step);

/// Gaussian density normalized to max 1 over the raster; all zeros when every weight is zero.
std::vector<double> heatmap_intensity(const Viewport& vp, const std::vector<std::pair<GeoPoint, double>>& points,
                                      double sigma_m);

/// Throws std::invalid_argument when sigma <= 0 or a weight is negative.
Raster render_heatmap(Raster raster, const Viewport& vp, const std::vector<std::pair<GeoPoint, double>>& points,
                      double sigma_m, Colormap cmap = Colormap::heat);

/// Pixel holding a continuous coordinate (floor on both axes).
inline std::pair<int, int> pixel_of(PixelCoord p) {
  return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))};
}

/// 5x7 glyph rows (bit 4 = leftmost column) for 'A'..'Z'; nullopt for other characters.
std::optional<std::array<std::uint8_t, 7>> glyph(char c);

// ---- PPM ----------------------------------------------------------------------

std::string write_ppm(const Raster& raster);
/// Throws ParseError naming the byte offset of the defect.
Raster read_ppm(std::string_view bytes);

}  // namespace geodecoder::render
