// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace geodecoder::render {

namespace {

std::uint8_t round_channel(double v) { return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0)); }

std::vector<PixelCoord> project_all(const std::vector<GeoPoint>& pts, const Viewport& vp) {
  std::vector<PixelCoord> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(geo::project(p, vp));
  return out;
}

// Even-odd scanline fill sampling pixel centers. `paint` receives (x, y).
template <typename Paint>
void scan_polygon(const Raster& r, const std::vector<PixelCoord>& ring, Paint&& paint) {
  if (ring.size() < 3) return;
  double ymin = ring[0].y, ymax = ring[0].y;
  for (const auto& p : ring) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int y0 = std::max(0, static_cast<int>(std::floor(ymin)));
  const int y1 = std::min(r.height() - 1, static_cast<int>(std::ceil(ymax)));
  std::vector<double> xs;
  for (int y = y0; y <= y1; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      const PixelCoord a = ring[i];
      const PixelCoord b = ring[j];
      if ((a.y > yc) != (b.y > yc)) xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int xa = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int xb = std::min(r.width() - 1, static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1);
      for (int x = xa; x <= xb; ++x) paint(x, y);
    }
  }
}

void fill_polygon(Raster& r, const std::vector<PixelCoord>& ring, Rgb color) {
  scan_polygon(r, ring, [&](int x, int y) { r.set(x, y, color); });
}

void stamp(Raster& r, int cx, int cy, int width, Rgb color) {
  const int lo = -(width / 2);
  const int hi = lo + width - 1;
  for (int dy = lo; dy <= hi; ++dy)
    for (int dx = lo; dx <= hi; ++dx) r.plot(cx + dx, cy + dy, color);
}

// DDA walk over one segment; `color_at(s)` maps the pixel-space arclength from
// the polyline start to a color, or nullopt to skip (dash gaps).
template <typename ColorAt>
void dda_segment(Raster& r, PixelCoord a, PixelCoord b, double s0, int width, ColorAt&& color_at) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const auto [px, py] = pixel_of({a.x + dx * t, a.y + dy * t});
    if (const std::optional<Rgb> c = color_at(s0 + len * t)) stamp(r, px, py, width, *c);
  }
}

void draw_polyline(Raster& r, const std::vector<PixelCoord>& pts, int width, Rgb color, bool closed = false) {
  auto flat = [&](double) -> std::optional<Rgb> { return color; };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) dda_segment(r, pts[i], pts[i + 1], 0.0, width, flat);
  if (closed && pts.size() > 2) dda_segment(r, pts.back(), pts.front(), 0.0, width, flat);
}

int aoi_depth(const world::MapWorld& w, const world::Aoi& a) {
  int depth = 0;
  const world::Aoi* cur = &a;
  while (cur->parent_id && depth < 16) {
    cur = w.find_aoi(*cur->parent_id);
    if (cur == nullptr) break;
    ++depth;
  }
  return depth;
}

void draw_marker(Raster& r, const Viewport& vp, const Marker& m) {
  const PixelCoord c = std::holds_alternative<GeoPoint>(m.at) ? geo::project(std::get<GeoPoint>(m.at), vp)
                                                              : std::get<PixelCoord>(m.at);
  const auto [cx, cy] = pixel_of(c);
  const int rad = m.radius;
  switch (m.shape) {
    case MarkerShape::dot:
      for (int dy = -rad; dy <= rad; ++dy)
        for (int dx = -rad; dx <= rad; ++dx)
          if (dx * dx + dy * dy <= rad * rad) r.plot(cx + dx, cy + dy, m.color);
      break;
    case MarkerShape::diamond:
      for (int dy = -rad; dy <= rad; ++dy)
        for (int dx = -rad; dx <= rad; ++dx)
          if (std::abs(dx) + std::abs(dy) <= rad) r.plot(cx + dx, cy + dy, m.color);
      break;
    case MarkerShape::circle:
      for (int dy = -rad - 1; dy <= rad + 1; ++dy)
        for (int dx = -rad - 1; dx <= rad + 1; ++dx)
          if (std::abs(std::sqrt(static_cast<double>(dx * dx + dy * dy)) - rad) <= 0.75) r.plot(cx + dx, cy + dy, m.color);
      break;
    case MarkerShape::letter: {
      const auto rows = glyph(m.letter);
      if (!rows) throw std::invalid_argument(std::string("no glyph for marker letter '") + m.letter + "'");
      const int k = std::max(1, rad / 4);
      const int bw = 5 * k + 2;
      const int bh = 7 * k + 2;
      const int x0 = cx - bw / 2;
      const int y0 = cy - bh / 2;
      for (int y = 0; y < bh; ++y)
        for (int x = 0; x < bw; ++x) r.plot(x0 + x, y0 + y, m.color);
      for (int gy = 0; gy < 7 * k; ++gy)
        for (int gx = 0; gx < 5 * k; ++gx)
          if (((*rows)[gy / k] >> (4 - gx / k)) & 1) r.plot(x0 + 1 + gx, y0 + 1 + gy, Rgb{255, 255, 255});
      break;
    }
    case MarkerShape::scanner: {
      for (int dy = -rad; dy <= rad; ++dy) {
        for (int dx = -rad; dx <= rad; ++dx) {
          if (dx * dx + dy * dy > rad * rad || (dx == 0 && dy == 0)) continue;
          const double bearing = std::atan2(static_cast<double>(dx), static_cast<double>(-dy)) * 180.0 / std::numbers::pi;
          double diff = std::fmod(std::abs(bearing - m.angle_deg), 360.0);
          if (diff > 180.0) diff = 360.0 - diff;
          if (diff <= kScannerHalfAngleDeg) r.plot(cx + dx, cy + dy, m.color);
        }
      }
      const int a = kScannerApexRadiusPx;
      for (int dy = -a; dy <= a; ++dy)
        for (int dx = -a; dx <= a; ++dx)
          if (dx * dx + dy * dy <= a * a) r.plot(cx + dx, cy + dy, m.color);
      break;
    }
  }
}

void draw_path(Raster& r, const Viewport& vp, const Path& path) {
  if (path.points.size() < 2) throw std::invalid_argument("path overlay needs at least 2 points");
  const auto pts = project_all(path.points, vp);
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
  const double total = cum.back();
  auto color_at = [&](double s) -> std::optional<Rgb> {
    if (path.style == StrokeStyle::dashed && std::fmod(s, kDashOnPx + kDashOffPx) >= kDashOnPx) return std::nullopt;
    if (const auto* flat = std::get_if<FlatColor>(&path.coloring)) return flat->color;
    const auto& g = std::get<TemporalGradient>(path.coloring);
    return blend(g.from, g.to, total > 0 ? std::clamp(s / total, 0.0, 1.0) : 0.0);
  };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) dda_segment(r, pts[i], pts[i + 1], cum[i], path.width, color_at);
}

void draw_polygon(Raster& r, const Viewport& vp, const Polygon& poly) {
  if (poly.ring.size() < 3) throw std::invalid_argument("polygon overlay needs at least 3 vertices");
  const auto ring = project_all(poly.ring, vp);
  if (poly.fill) {
    const double a = std::clamp(poly.fill_alpha, 0.0, 1.0);
    scan_polygon(r, ring, [&](int x, int y) { r.set(x, y, blend(r.at(x, y), *poly.fill, a)); });
  }
  draw_polyline(r, ring, 1, poly.outline, true);
}

}  // namespace

Rgb blend(Rgb a, Rgb b, double t) {
  return {round_channel(a.r + (b.r - a.r) * t), round_channel(a.g + (b.g - a.g) * t), round_channel(a.b + (b.b - a.b) * t)};
}

Raster::Raster(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("raster dimensions must be non-negative");
  pixels_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Raster Raster::from_pixels(int width, int height, std::vector<std::uint8_t> pixels) {
  if (width < 0 || height < 0 || pixels.size() != static_cast<std::size_t>(width) * height * 3) {
    throw std::invalid_argument("pixel buffer size does not match 3 * width * height");
  }
  Raster r;
  r.width_ = width;
  r.height_ = height;
  r.pixels_ = std::move(pixels);
  return r;
}

std::string_view element_name(ElementClass c) {
  switch (c) {
    case ElementClass::land: return "land";
    case ElementClass::water: return "water";
    case ElementClass::green: return "green space";
    case ElementClass::major_road: return "major road";
    case ElementClass::minor_road: return "minor road";
    case ElementClass::residential: return "residential area";
    case ElementClass::campus: return "campus";
    case ElementClass::park: return "park";
    case ElementClass::mall: return "mall";
    case ElementClass::office: return "office building";
  }
  return "?";
}

ElementClass element_class_from_name(std::string_view name) {
  for (auto c : kAllElementClasses)
    if (element_name(c) == name) return c;
  throw std::invalid_argument("unknown element class '" + std::string(name) + "'");
}

ElementClass element_class_of(world::AoiCategory c) {
  switch (c) {
    case world::AoiCategory::residential: return ElementClass::residential;
    case world::AoiCategory::campus: return ElementClass::campus;
    case world::AoiCategory::park: return ElementClass::park;
    case world::AoiCategory::mall: return ElementClass::mall;
    case world::AoiCategory::office: return ElementClass::office;
  }
  return ElementClass::land;
}

std::vector<std::pair<Rgb, ElementClass>> style_palette(const Style& s) {
  std::vector<std::pair<Rgb, ElementClass>> out = {{s.background, ElementClass::land},
                                                   {s.water, ElementClass::water},
                                                   {s.green, ElementClass::green},
                                                   {s.major_road, ElementClass::major_road},
                                                   {s.minor_road, ElementClass::minor_road}};
  for (int k = 0; k < 5; ++k) {
    const auto cls = element_class_of(static_cast<world::AoiCategory>(k));
    out.emplace_back(s.aoi_fill[k], cls);
    out.emplace_back(s.aoi_outline[k], cls);
  }
  return out;
}

bool colors_distinct(const Style& s) {
  const auto pal = style_palette(s);
  for (std::size_t i = 0; i < pal.size(); ++i)
    for (std::size_t j = i + 1; j < pal.size(); ++j)
      if (pal[i].first == pal[j].first) return false;
  return true;
}

std::optional<ElementClass> classify(const Style& s, Rgb c) {
  for (const auto& [rgb, cls] : style_palette(s))
    if (rgb == c) return cls;
  return std::nullopt;
}

Raster render_base(const world::MapWorld& world, const Viewport& vp, const Style& style) {
  geo::validate(vp);
  Raster r(vp.width_px, vp.height_px, style.background);
  for (const auto& g : world.green) fill_polygon(r, project_all(g, vp), style.green);
  for (const auto& w : world.water) fill_polygon(r, project_all(w, vp), style.water);

  std::vector<std::pair<int, const world::Aoi*>> aois;
  aois.reserve(world.aois.size());
  for (const auto& a : world.aois) aois.emplace_back(aoi_depth(world, a), &a);
  std::stable_sort(aois.begin(), aois.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [depth, a] : aois) {
    const auto ring = project_all(a->polygon, vp);
    fill_polygon(r, ring, style.fill_for(a->category));
    draw_polyline(r, ring, 1, style.outline_for(a->category), true);
  }
  for (const auto cls : {world::RoadClass::minor, world::RoadClass::major}) {
    const bool major = cls == world::RoadClass::major;
    for (const auto& road : world.roads) {
      if (road.road_class != cls) continue;
      draw_polyline(r, project_all(road.polyline, vp), major ? kMajorRoadWidthPx : kMinorRoadWidthPx,
                    major ? style.major_road : style.minor_road);
    }
  }
  return r;
}

Raster draw_overlay(Raster raster, const Viewport& vp, const Overlay& overlay) {
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Marker>) {
          draw_marker(raster, vp, o);
        } else if constexpr (std::is_same_v<T, Path>) {
          draw_path(raster, vp, o);
        } else if constexpr (std::is_same_v<T, Polygon>) {
          draw_polygon(raster, vp, o);
        } else {
          raster = render_heatmap(std::move(raster), vp, o.points, o.sigma_m, o.colormap);
        }
      },
      overlay);
  return raster;
}

Rgb colormap_color(Colormap cmap, int step) {
  step = std::clamp(step, 0, 255);
  switch (cmap) {
    case Colormap::heat:
      // yellow -> red
      return {255, static_cast<std::uint8_t>(255 - step), 0};
  }
  return {};
}

std::vector<double> heatmap_intensity(const Viewport& vp, const std::vector<std::pair<GeoPoint, double>>& points,
                                      double sigma_m) {
  const double sigma_px = sigma_m / geo::meters_per_pixel(vp.scale);
  const double inv = 1.0 / (2.0 * sigma_px * sigma_px);
  std::vector<PixelCoord> centers;
  std::vector<double> weights;
  for (const auto& [p, w] : points) {
    if (w <= 0) continue;
    centers.push_back(geo::project(p, vp));
    weights.push_back(w);
  }
  std::vector<double> grid(static_cast<std::size_t>(vp.width_px) * vp.height_px, 0.0);
  if (centers.empty()) return grid;
  double peak = 0.0;
  for (int y = 0; y < vp.height_px; ++y) {
    for (int x = 0; x < vp.width_px; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < centers.size(); ++i) {
        const double dx = x + 0.5 - centers[i].x;
        const double dy = y + 0.5 - centers[i].y;
        s += weights[i] * std::exp(-(dx * dx + dy * dy) * inv);
      }
      grid[static_cast<std::size_t>(y) * vp.width_px + x] = s;
      peak = std::max(peak, s);
    }
  }
  if (peak > 0)
    for (auto& v : grid) v /= peak;
  return grid;
}

Raster render_heatmap(Raster raster, const Viewport& vp, const std::vector<std::pair<GeoPoint, double>>& points,
                      double sigma_m, Colormap cmap) {
  if (!(sigma_m > 0)) throw std::invalid_argument("heatmap sigma must be positive");
  bool any = false;
  for (const auto& [p, w] : points) {
    if (w < 0) throw std::invalid_argument("heatmap weights must be non-negative");
    any = any || w > 0;
  }
  if (!any) return raster;
  Viewport grid_vp = vp;
  grid_vp.width_px = raster.width();
  grid_vp.height_px = raster.height();
  const auto grid = heatmap_intensity(grid_vp, points, sigma_m);
  for (int y = 0; y < raster.height(); ++y) {
    for (int x = 0; x < raster.width(); ++x) {
      const int step = static_cast<int>(std::floor(grid[static_cast<std::size_t>(y) * raster.width() + x] * 255.0 + 0.5));
      if (step == 0) continue;
      raster.set(x, y, blend(raster.at(x, y), colormap_color(cmap, step), kHeatmapAlpha * step / 255.0));
    }
  }
  return raster;
}

std::optional<std::array<std::uint8_t, 7>> glyph(char c) {
  static constexpr std::array<std::array<std::uint8_t, 7>, 26> kFont = {{
      {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
      {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E},
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
      {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
      {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
      {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
      {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
      {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
      {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
      {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
  }};
  if (c < 'A' || c > 'Z') return std::nullopt;
  return kFont[static_cast<std::size_t>(c - 'A')];
}

}  // namespace geodecoder::render
