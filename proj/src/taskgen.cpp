// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "geodecoder/error.hpp"
#include "geodecoder/textcodec.hpp"

namespace geodecoder::tasks {

using geo::Vec2;
using render::ElementClass;
using render::Marker;
using render::MarkerShape;

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::ElementId: return "ElementId";
    case TaskKind::TagId: return "TagId";
    case TaskKind::PoiId: return "PoiId";
    case TaskKind::AoiId: return "AoiId";
    case TaskKind::RoadId: return "RoadId";
    case TaskKind::CoordGen: return "CoordGen";
    case TaskKind::Geocoding: return "Geocoding";
    case TaskKind::ReverseGeocoding: return "ReverseGeocoding";
    case TaskKind::ParentChild: return "ParentChild";
    case TaskKind::PoiCoordGen: return "PoiCoordGen";
    case TaskKind::ArrivalPoint: return "ArrivalPoint";
  }
  return "?";
}

TaskKind task_kind_from_string(std::string_view s) {
  for (auto k : kAllTaskKinds)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown task kind '" + std::string(s) + "'");
}

Rgb marker_color(std::string_view name) {
  for (const auto& c : kMarkerColors)
    if (c.name == name) return c.rgb;
  throw std::invalid_argument("unknown marker color '" + std::string(name) + "'");
}

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::camera: return "camera";
    case Channel::waybill: return "waybill";
    case Channel::user: return "user";
    case Channel::wifi: return "wifi";
  }
  return "?";
}

Rgb channel_color(Channel c) {
  switch (c) {
    case Channel::camera: return marker_color("red");
    case Channel::waybill: return marker_color("orange");
    case Channel::user: return marker_color("purple");
    case Channel::wifi: return marker_color("cyan");
  }
  return {};
}

double channel_noise_m(Channel c) {
  switch (c) {
    case Channel::camera: return 15.0;
    case Channel::waybill: return 80.0;
    case Channel::user: return 40.0;
    case Channel::wifi: return 10.0;
  }
  return 0.0;
}

void validate(const SamplePolicy& p) {
  if (p.width_px < 32 || p.width_px > 4096) throw ValidationError("width_px", "must lie in [32, 4096]");
  if (p.height_px < 32 || p.height_px > 4096) throw ValidationError("height_px", "must lie in [32, 4096]");
  if (p.coarse_scale < geo::kMinScale || p.coarse_scale > geo::kMaxScale)
    throw ValidationError("coarse_scale", "must lie in [3, 18]");
  if (p.element_context_px < 0 || 2 * p.element_context_px + 1 > std::min(p.width_px, p.height_px) / 2)
    throw ValidationError("element_context_px", "must be non-negative and leave room inside the image");
  if (p.fine_scale < geo::kMinScale || p.fine_scale > geo::kMaxScale) throw ValidationError("fine_scale", "must lie in [3, 18]");
}

namespace {

constexpr int kMaxAttempts = 200;
constexpr int kMarginPx = 4;
constexpr Rgb kRed{230, 0, 0};
constexpr Rgb kGreen{0, 170, 0};
constexpr Rgb kBlue{0, 90, 230};
constexpr Rgb kOrange{255, 140, 0};
constexpr Rgb kBlack{20, 20, 20};

struct Ctx {
  const world::MapWorld& world;
  const SamplePolicy& policy;
  Rng& rng;
  render::Style style;
};

Viewport make_vp(const Ctx& c, GeoPoint center, int scale) { return {center, scale, c.policy.width_px, c.policy.height_px}; }

bool inside(const Viewport& vp, PixelCoord p, int margin = kMarginPx) {
  return p.x >= margin && p.y >= margin && p.x <= vp.width_px - margin && p.y <= vp.height_px - margin;
}

// Viewport in which `target` lands at a uniformly random pixel of the central half.
Viewport viewport_around(const Ctx& c, GeoPoint target, int scale) {
  const Viewport centered = make_vp(c, target, scale);
  const double mx = c.rng.uniform(0.25, 0.75) * c.policy.width_px;
  const double my = c.rng.uniform(0.25, 0.75) * c.policy.height_px;
  return make_vp(c, geo::unproject({c.policy.width_px - mx, c.policy.height_px - my}, centered), scale);
}

GeoPoint random_point(const world::MapWorld& w, Rng& rng, double inset_frac = 0.0) {
  const auto& sw = w.extent.south_west;
  const auto& ne = w.extent.north_east;
  const double dl = (ne.lng - sw.lng) * inset_frac;
  const double da = (ne.lat - sw.lat) * inset_frac;
  return {rng.uniform(sw.lng + dl, ne.lng - dl), rng.uniform(sw.lat + da, ne.lat - da)};
}

const world::Poi& uniform_poi(const Ctx& c) {
  if (c.world.pois.empty()) throw GenerationError("world has no POIs");
  return c.world.pois[c.rng.index(c.world.pois.size())];
}

Marker dot_at(GeoPoint p, Rgb color, int radius = 2) {
  Marker m;
  m.at = p;
  m.shape = MarkerShape::dot;
  m.color = color;
  m.radius = radius;
  return m;
}

std::string rounded_pixel_text(PixelCoord p) { return text::format_pixel(p); }

PixelCoord rounded(PixelCoord p) { return {std::floor(p.x + 0.5), std::floor(p.y + 0.5)}; }

[[noreturn]] void give_up(TaskKind k, const std::string& why) {
  throw GenerationError(std::string(to_string(k)) + ": " + why);
}

// ---- identification -----------------------------------------------------------

Sample element_id(Ctx& c) {
  std::vector<ElementClass> classes = c.policy.element_classes;
  if (classes.empty()) classes.assign(render::kAllElementClasses.begin(), render::kAllElementClasses.end());
  const ElementClass want = classes[c.rng.index(classes.size())];
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Viewport vp = make_vp(c, random_point(c.world, c.rng, 0.1), c.policy.coarse_scale);
    Raster base = render::render_base(c.world, vp, c.style);
    const int r = c.policy.element_context_px;
    const int margin = std::max(kMarginPx, r);
    std::vector<std::uint8_t> is_want(static_cast<std::size_t>(vp.width_px) * vp.height_px);
    for (int y = 0; y < vp.height_px; ++y)
      for (int x = 0; x < vp.width_px; ++x)
        is_want[static_cast<std::size_t>(y) * vp.width_px + x] = render::classify(c.style, base.at(x, y)) == want;
    auto homogeneous = [&](int x, int y) {
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          if (!is_want[static_cast<std::size_t>(y + dy) * vp.width_px + x + dx]) return false;
      return true;
    };
    std::vector<std::pair<int, int>> candidates;
    for (int y = margin; y < vp.height_px - margin; ++y)
      for (int x = margin; x < vp.width_px - margin; ++x)
        if (homogeneous(x, y)) candidates.emplace_back(x, y);
    if (candidates.empty()) continue;
    const auto [x, y] = candidates[c.rng.index(candidates.size())];
    Marker ring;
    ring.at = PixelCoord{x + 0.5, y + 0.5};
    ring.shape = MarkerShape::circle;
    ring.color = kRed;
    ring.radius = 2;
    Sample s;
    s.kind = TaskKind::ElementId;
    s.viewport = vp;
    s.raster = render::draw_overlay(std::move(base), vp, ring);
    s.input_text = "what is at the red dot?";
    s.target_text = std::string(render::element_name(want));
    s.truth.label = s.target_text;
    s.truth.marked = PixelCoord{x + 0.5, y + 0.5};
    return s;
  }
  give_up(TaskKind::ElementId, "no pixel of class '" + std::string(render::element_name(want)) + "' found");
}

struct Box {
  int x0, y0, x1, y1;  // inclusive
  bool overlaps(const Box& o, int gap) const {
    return !(x1 + gap < o.x0 || o.x1 + gap < x0 || y1 + gap < o.y0 || o.y1 + gap < y0);
  }
};

Box tag_box(const TagDef& tag, int cx, int cy) {
  if (tag.letter == '\0') return {cx - kScannerRadiusPx, cy - kScannerRadiusPx, cx + kScannerRadiusPx, cy + kScannerRadiusPx};
  const int k = std::max(1, kTagRadiusPx / 4);
  const int bw = 5 * k + 2;
  const int bh = 7 * k + 2;
  return {cx - bw / 2, cy - bh / 2, cx - bw / 2 + bw - 1, cy - bh / 2 + bh - 1};
}

Sample tag_id(Ctx& c) {
  const Viewport vp = make_vp(c, random_point(c.world, c.rng, 0.1), c.policy.coarse_scale);
  Raster raster = render::render_base(c.world, vp, c.style);
  const int n = 1 + static_cast<int>(c.rng.index(3));
  std::vector<std::size_t> colors(kMarkerColors.size());
  std::vector<std::size_t> tags(kTags.size());
  for (std::size_t i = 0; i < colors.size(); ++i) colors[i] = i;
  for (std::size_t i = 0; i < tags.size(); ++i) tags[i] = i;
  for (std::size_t k = colors.size(); k > 1; --k) std::swap(colors[k - 1], colors[c.rng.index(k)]);
  for (std::size_t k = tags.size(); k > 1; --k) std::swap(tags[k - 1], tags[c.rng.index(k)]);

  std::vector<Box> placed;
  for (int i = 0; i < n; ++i) {
    const TagDef& tag = kTags[tags[i]];
    Box box{};
    int cx = 0, cy = 0;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      const int lo = kScannerRadiusPx + 2;
      cx = static_cast<int>(c.rng.uniform_int(lo, vp.width_px - 1 - lo));
      cy = static_cast<int>(c.rng.uniform_int(lo, vp.height_px - 1 - lo));
      box = tag_box(tag, cx, cy);
      ok = std::none_of(placed.begin(), placed.end(), [&](const Box& b) { return b.overlaps(box, 2); });
    }
    if (!ok) give_up(TaskKind::TagId, "could not place non-overlapping symbols");
    placed.push_back(box);
    Marker m;
    m.at = PixelCoord{cx + 0.5, cy + 0.5};
    m.color = kMarkerColors[colors[i]].rgb;
    if (tag.letter == '\0') {
      m.shape = MarkerShape::scanner;
      m.radius = kScannerRadiusPx;
      m.angle_deg = c.rng.uniform(0.0, 360.0);
    } else {
      m.shape = MarkerShape::letter;
      m.radius = kTagRadiusPx;
      m.letter = tag.letter;
    }
    raster = render::draw_overlay(std::move(raster), vp, m);
  }
  const int q = static_cast<int>(c.rng.index(static_cast<std::size_t>(n)));
  Sample s;
  s.kind = TaskKind::TagId;
  s.viewport = vp;
  s.raster = std::move(raster);
  s.input_text = "what does the " + std::string(kMarkerColors[colors[q]].name) + " symbol mean?";
  s.target_text = std::string(kTags[tags[q]].meaning);
  s.truth.label = s.target_text;
  s.truth.marked = PixelCoord{(placed[q].x0 + placed[q].x1 + 1) / 2.0, (placed[q].y0 + placed[q].y1 + 1) / 2.0};
  return s;
}

Sample poi_id(Ctx& c) {
  const EntityId id = world::sample_poi_by_popularity(c.world, c.rng);
  const world::Poi& poi = *c.world.find_poi(id);
  const Viewport vp = viewport_around(c, poi.location, c.policy.coarse_scale);
  Sample s;
  s.kind = TaskKind::PoiId;
  s.viewport = vp;
  s.raster = render::draw_overlay(render::render_base(c.world, vp, c.style), vp, dot_at(poi.location, kGreen));
  s.input_text = "what is the name of the place at the green dot?";
  s.target_text = poi.name;
  s.truth.label = poi.name;
  s.truth.entity = poi.id;
  s.truth.marked = geo::project(poi.location, vp);
  return s;
}

render::Polygon aoi_highlight(const world::Aoi& a) {
  render::Polygon p;
  p.ring = a.polygon;
  p.fill = kBlue;
  p.fill_alpha = 1.0;
  p.outline = kBlue;
  return p;
}

Sample aoi_id(Ctx& c) {
  if (c.world.aois.empty()) give_up(TaskKind::AoiId, "world has no AOIs");
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const world::Aoi& aoi = c.world.aois[c.rng.index(c.world.aois.size())];
    const Viewport vp = viewport_around(c, world::ring_centroid(aoi.polygon), c.policy.coarse_scale);
    const Raster base = render::render_base(c.world, vp, c.style);
    Raster raster = render::draw_overlay(base, vp, aoi_highlight(aoi));
    if (raster == base) continue;
    // The highlighted shape must single out this AOI.
    bool unique = true;
    for (const auto& other : c.world.aois) {
      if (other.id == aoi.id) continue;
      if (render::draw_overlay(base, vp, aoi_highlight(other)) == raster) {
        unique = false;
        break;
      }
    }
    if (!unique) continue;
    Sample s;
    s.kind = TaskKind::AoiId;
    s.viewport = vp;
    s.raster = std::move(raster);
    s.input_text = "what is the name of the blue area?";
    s.target_text = aoi.name;
    s.truth.label = aoi.name;
    s.truth.entity = aoi.id;
    s.truth.marked = geo::project(world::ring_centroid(aoi.polygon), vp);
    return s;
  }
  give_up(TaskKind::AoiId, "no uniquely identifiable AOI found");
}

Raster road_mask(const Raster& base, const Viewport& vp, const std::vector<GeoPoint>& pts) {
  render::Path p;
  p.points = pts;
  p.coloring = render::FlatColor{kOrange};
  p.width = 3;
  return render::draw_overlay(base, vp, p);
}

Sample road_id(Ctx& c) {
  if (c.world.roads.empty()) give_up(TaskKind::RoadId, "world has no roads");
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const world::Road& road = c.world.roads[c.rng.index(c.world.roads.size())];
    const std::size_t nv = road.polyline.size();
    if (nv < 2) continue;
    const std::size_t span = std::min<std::size_t>(nv - 1, 1 + c.rng.index(2));
    const std::size_t first = c.rng.index(nv - span);
    const std::vector<GeoPoint> run(road.polyline.begin() + static_cast<std::ptrdiff_t>(first),
                                    road.polyline.begin() + static_cast<std::ptrdiff_t>(first + span + 1));
    const GeoPoint mid{(run.front().lng + run.back().lng) / 2, (run.front().lat + run.back().lat) / 2};
    const Viewport vp = viewport_around(c, mid, c.policy.coarse_scale);
    const Raster base = render::render_base(c.world, vp, c.style);
    Raster raster = road_mask(base, vp, run);
    if (raster == base) continue;
    Sample s;
    s.kind = TaskKind::RoadId;
    s.viewport = vp;
    s.raster = std::move(raster);
    s.input_text = "what is the name of the orange road?";
    s.target_text = road.name;
    s.truth.label = road.name;
    s.truth.entity = road.id;
    s.truth.marked = geo::project(mid, vp);
    return s;
  }
  give_up(TaskKind::RoadId, "no visible road run found");
}

// ---- coordinates and addresses -------------------------------------------------

Sample coord_gen(Ctx& c) {
  const world::Poi& poi = uniform_poi(c);
  const Viewport vp = viewport_around(c, poi.location, c.policy.coarse_scale);
  Sample s;
  s.kind = TaskKind::CoordGen;
  s.viewport = vp;
  s.raster = render::draw_overlay(render::render_base(c.world, vp, c.style), vp, dot_at(poi.location, kRed));
  s.input_text = "what are the coordinates of the red dot?";
  s.target_text = text::format_coord(poi.location);
  s.truth.point = text::parse_coord(s.target_text);
  s.truth.entity = poi.id;
  s.truth.marked = geo::project(poi.location, vp);
  return s;
}

Sample geocoding(Ctx& c) {
  const world::Poi& poi = uniform_poi(c);
  const world::Address addr = world::parse_address(poi.address);
  const world::District* district = nullptr;
  for (const auto& d : c.world.district_tree.districts)
    if (d.name == addr.district) district = &d;
  if (district == nullptr) give_up(TaskKind::Geocoding, "address district '" + addr.district + "' is not in the tree");
  const GeoPoint center = world::ring_centroid(district->boundary);
  const Viewport centered = make_vp(c, center, c.policy.coarse_scale);
  const double jx = c.rng.uniform(-0.1, 0.1) * c.policy.width_px;
  const double jy = c.rng.uniform(-0.1, 0.1) * c.policy.height_px;
  const Viewport vp = make_vp(c, geo::unproject({c.policy.width_px / 2.0 + jx, c.policy.height_px / 2.0 + jy}, centered),
                              c.policy.coarse_scale);
  render::Path outline;
  outline.points = district->boundary;
  outline.points.push_back(district->boundary.front());
  outline.coloring = render::FlatColor{kBlack};
  outline.width = 1;
  Sample s;
  s.kind = TaskKind::Geocoding;
  s.viewport = vp;
  s.raster = render::draw_overlay(render::render_base(c.world, vp, c.style), vp, outline);
  s.input_text = "where is " + poi.name + ", " + poi.address + "?";
  s.target_text = text::format_coord(poi.location);
  s.truth.point = text::parse_coord(s.target_text);
  s.truth.entity = poi.id;
  return s;
}

Sample reverse_geocoding(Ctx& c) {
  const world::Poi& poi = uniform_poi(c);
  const Viewport vp = viewport_around(c, poi.location, c.policy.coarse_scale);
  Sample s;
  s.kind = TaskKind::ReverseGeocoding;
  s.viewport = vp;
  s.raster = render::draw_overlay(render::render_base(c.world, vp, c.style), vp, dot_at(poi.location, kRed));
  s.input_text = "what is the address at " + text::format_coord(poi.location) + "?";
  s.target_text = poi.address;
  s.truth.label = poi.address;
  s.truth.entity = poi.id;
  s.truth.marked = geo::project(poi.location, vp);
  return s;
}

// ---- finetuning tasks ----------------------------------------------------------

struct Entity {
  std::string name;
  const world::Aoi* aoi = nullptr;
  const world::Poi* poi = nullptr;
  GeoPoint anchor() const { return aoi ? world::ring_centroid(aoi->polygon) : poi->location; }
  std::optional<EntityId> parent() const { return aoi ? aoi->parent_id : poi->parent_id; }
  EntityId id() const { return aoi ? aoi->id : poi->id; }
};

Entity entity_of(const world::MapWorld& w, EntityId id) {
  if (const auto* a = w.find_aoi(id)) return {a->name, a, nullptr};
  if (const auto* p = w.find_poi(id)) return {p->name, nullptr, p};
  throw GenerationError("dangling entity id " + std::to_string(id));
}

render::Overlay entity_overlay(const Entity& e, Rgb color) {
  if (e.aoi) {
    render::Polygon p;
    p.ring = e.aoi->polygon;
    p.outline = color;
    return p;
  }
  Marker m;
  m.at = e.poi->location;
  m.shape = MarkerShape::diamond;
  m.color = color;
  m.radius = 3;
  return m;
}

Sample parent_child(Ctx& c) {
  std::vector<Entity> children;
  for (const auto& a : c.world.aois)
    if (a.parent_id) children.push_back({a.name, &a, nullptr});
  for (const auto& p : c.world.pois)
    if (p.parent_id) children.push_back({p.name, nullptr, &p});
  if (children.empty() || c.world.aois.size() < 2) give_up(TaskKind::ParentChild, "world has no parent-child pairs");

  const int cls = static_cast<int>(c.rng.index(3));
  Entity first, second;
  if (cls == 0) {
    // An AOI and a nearby entity that is not linked to it either way.
    const geo::LocalFrame f = c.world.frame();
    bool found = false;
    for (int attempt = 0; attempt < kMaxAttempts && !found; ++attempt) {
      const world::Aoi& a = c.world.aois[c.rng.index(c.world.aois.size())];
      const Entity& other = children[c.rng.index(children.size())];
      const Entity host{a.name, &a, nullptr};
      if (other.id() == a.id || other.parent() == a.id || a.parent_id == other.id()) continue;
      if (geo::norm(f.to_local(host.anchor()) - f.to_local(other.anchor())) > 2500.0) continue;
      first = host;
      second = other;
      found = true;
    }
    if (!found) give_up(TaskKind::ParentChild, "no unrelated nearby pair found");
    if (c.rng.bernoulli(0.5)) std::swap(first, second);
  } else {
    const Entity child = children[c.rng.index(children.size())];
    const Entity parent = entity_of(c.world, *child.parent());
    first = cls == 1 ? parent : child;
    second = cls == 1 ? child : parent;
  }
  const GeoPoint a = first.anchor();
  const GeoPoint b = second.anchor();
  const Viewport vp = viewport_around(c, {(a.lng + b.lng) / 2, (a.lat + b.lat) / 2}, c.policy.coarse_scale);
  Raster raster = render::render_base(c.world, vp, c.style);
  raster = render::draw_overlay(std::move(raster), vp, entity_overlay(first, kBlue));
  raster = render::draw_overlay(std::move(raster), vp, entity_overlay(second, kRed));
  Sample s;
  s.kind = TaskKind::ParentChild;
  s.viewport = vp;
  s.raster = std::move(raster);
  s.input_text = "how are " + first.name + " and " + second.name + " related?";
  s.target_text = std::string(cls == 0 ? kNoRelation : cls == 1 ? kFirstIsParent : kSecondIsParent);
  s.truth.label = s.target_text;
  return s;
}

struct EdgeHit {
  const world::Aoi* aoi = nullptr;
  Vec2 closest;
  double distance = std::numeric_limits<double>::infinity();
};

EdgeHit nearest_aoi_edge(const world::MapWorld& w, const geo::LocalFrame& f, Vec2 p) {
  EdgeHit best;
  for (const auto& a : w.aois) {
    std::vector<Vec2> ring;
    for (const auto& g : a.polygon) ring.push_back(f.to_local(g));
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const auto sp = geo::project_to_segment(p, ring[i], ring[(i + 1) % ring.size()]);
      if (sp.distance < best.distance) best = {&a, sp.closest, sp.distance};
    }
  }
  return best;
}

bool in_mall(const world::MapWorld& w, const world::SceneContext& ctx) {
  for (EntityId id : ctx.containing_aois)
    if (w.find_aoi(id)->category == world::AoiCategory::mall) return true;
  return false;
}

// Viewport showing every point inside the margin, or nullopt.
std::optional<Viewport> viewport_covering(Ctx& c, const std::vector<GeoPoint>& pts, int scale) {
  GeoPoint mid{0, 0};
  for (const auto& p : pts) {
    mid.lng += p.lng / static_cast<double>(pts.size());
    mid.lat += p.lat / static_cast<double>(pts.size());
  }
  for (int attempt = 0; attempt < 20; ++attempt) {
    const double jitter = attempt < 10 ? 0.15 : 0.0;
    const Viewport centered = make_vp(c, mid, scale);
    const PixelCoord shift{c.policy.width_px * (0.5 + c.rng.uniform(-jitter, jitter)),
                           c.policy.height_px * (0.5 + c.rng.uniform(-jitter, jitter))};
    const Viewport vp = make_vp(c, geo::unproject(shift, centered), scale);
    if (std::all_of(pts.begin(), pts.end(), [&](const GeoPoint& p) { return inside(vp, geo::project(p, vp)); })) return vp;
  }
  return std::nullopt;
}

Sample poi_coord_gen(Ctx& c) {
  const geo::LocalFrame f = c.world.frame();
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const world::Poi& poi = uniform_poi(c);
    const Vec2 loc = f.to_local(poi.location);
    const world::SceneContext ctx = world::locate(c.world, poi.location);
    const EdgeHit edge = nearest_aoi_edge(c.world, f, loc);
    if (edge.aoi == nullptr || edge.distance > 250.0) continue;

    Vec2 toward = edge.closest - loc;
    const double tl = geo::norm(toward);
    if (tl < 1e-9) {
      const double ang = c.rng.uniform(0.0, 2 * std::numbers::pi);
      toward = {std::cos(ang), std::sin(ang)};
    } else {
      toward = toward * (1.0 / tl);
    }
    auto observe = [&](Channel ch) -> Vec2 {
      if (ch == Channel::camera) return loc + toward * channel_noise_m(ch) + Vec2{c.rng.normal(0, 2.0), c.rng.normal(0, 2.0)};
      const double s = channel_noise_m(ch);
      return loc + Vec2{c.rng.normal(0, s), c.rng.normal(0, s)};
    };

    const bool building = ctx.aoi && (poi.category == world::PoiCategory::office || poi.category == world::PoiCategory::hotel);
    const bool indoor = !building && ctx.aoi && in_mall(c.world, ctx) &&
                        (poi.category == world::PoiCategory::shop || poi.category == world::PoiCategory::restaurant);
    const std::string rule = building ? "building" : indoor ? "indoor" : "street";

    // Camera and wifi appear at most once; waybill and user reports may repeat.
    std::vector<Channel> channels;
    channels.push_back(indoor ? Channel::wifi : Channel::camera);
    const int n = 2 + static_cast<int>(c.rng.index(4));
    while (static_cast<int>(channels.size()) < n) {
      const Channel ch = kAllChannels[c.rng.index(kAllChannels.size())];
      if ((ch == Channel::camera || ch == Channel::wifi) && std::find(channels.begin(), channels.end(), ch) != channels.end()) continue;
      channels.push_back(ch);
    }
    std::vector<std::pair<Channel, Vec2>> obs;
    for (Channel ch : channels) obs.emplace_back(ch, observe(ch));

    Vec2 truth;
    if (building) {
      truth = f.to_local(world::ring_centroid(c.world.find_aoi(*ctx.aoi)->polygon));
    } else if (indoor) {
      truth = obs.front().second;
    } else {
      truth = nearest_aoi_edge(c.world, f, obs.front().second).closest;
    }
    std::vector<GeoPoint> shown{f.to_geo(truth)};
    for (const auto& [ch, p] : obs) shown.push_back(f.to_geo(p));
    const auto vp = viewport_covering(c, shown, c.policy.fine_scale);
    if (!vp) continue;

    Raster raster = render::render_base(c.world, *vp, c.style);
    // Draw in a shuffled order so the channel order carries no signal.
    std::vector<std::size_t> order(obs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[c.rng.index(k)]);
    for (std::size_t i : order) raster = render::draw_overlay(std::move(raster), *vp, dot_at(f.to_geo(obs[i].second), channel_color(obs[i].first)));

    const GeoPoint truth_geo = f.to_geo(truth);
    const PixelCoord px = geo::project(truth_geo, *vp);
    Sample s;
    s.kind = TaskKind::PoiCoordGen;
    s.viewport = *vp;
    s.raster = std::move(raster);
    s.input_text = "where should " + poi.name + " be displayed?";
    s.target_text = rounded_pixel_text(px);
    s.truth.point = truth_geo;
    s.truth.pixel = rounded(px);
    s.truth.entity = poi.id;
    s.truth.channel_rule = rule;
    return s;
  }
  give_up(TaskKind::PoiCoordGen, "no POI with a displayable scene found");
}

Sample arrival_point(Ctx& c) {
  const geo::LocalFrame f = c.world.frame();
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const world::Poi& poi = uniform_poi(c);
    const world::RoadHit hit = world::nearest_road(c.world, poi.location);
    if (hit.distance_m > 200.0) continue;
    const GeoPoint arrival = world::closest_point_on_road(c.world, hit.road_id, poi.location);
    const auto vp = viewport_covering(c, {poi.location, arrival}, c.policy.fine_scale);
    if (!vp) continue;
    const PixelCoord px = rounded(geo::project(arrival, *vp));
    // Rounding must not move the answer onto another road.
    if (world::nearest_road(c.world, geo::unproject(px, *vp)).road_id != hit.road_id) continue;

    Raster raster = render::render_base(c.world, *vp, c.style);
    if (c.policy.arrival_heatmap) {
      render::Heatmap hm;
      hm.sigma_m = 12.0;
      const Vec2 a = f.to_local(arrival);
      const Vec2 p = f.to_local(poi.location);
      for (int i = 0; i < 30; ++i) {
        Vec2 q;
        if (i < 24) {
          q = a + Vec2{c.rng.normal(0, 25.0), c.rng.normal(0, 25.0)};
        } else {
          const double r = 150.0 * std::sqrt(c.rng.uniform());
          const double ang = c.rng.uniform(0.0, 2 * std::numbers::pi);
          q = p + Vec2{r * std::cos(ang), r * std::sin(ang)};
        }
        hm.points.emplace_back(f.to_geo(q), 1.0);
      }
      raster = render::draw_overlay(std::move(raster), *vp, hm);
    }
    Marker m;
    m.at = poi.location;
    m.shape = MarkerShape::diamond;
    m.color = kRed;
    m.radius = 3;
    raster = render::draw_overlay(std::move(raster), *vp, m);

    Sample s;
    s.kind = TaskKind::ArrivalPoint;
    s.viewport = *vp;
    s.raster = std::move(raster);
    s.input_text = "where is the arrival point of " + poi.name + "?";
    s.target_text = rounded_pixel_text(px);
    s.truth.point = arrival;
    s.truth.pixel = px;
    s.truth.road = hit.road_id;
    s.truth.entity = poi.id;
    s.truth.marked = geo::project(poi.location, *vp);
    return s;
  }
  give_up(TaskKind::ArrivalPoint, "no POI with a road within 200 m found");
}

}  // namespace

Sample make_sample(const world::MapWorld& world, TaskKind kind, const SamplePolicy& policy, Rng& rng) {
  validate(policy);
  Ctx c{world, policy, rng, {}};
  switch (kind) {
    case TaskKind::ElementId: return element_id(c);
    case TaskKind::TagId: return tag_id(c);
    case TaskKind::PoiId: return poi_id(c);
    case TaskKind::AoiId: return aoi_id(c);
    case TaskKind::RoadId: return road_id(c);
    case TaskKind::CoordGen: return coord_gen(c);
    case TaskKind::Geocoding: return geocoding(c);
    case TaskKind::ReverseGeocoding: return reverse_geocoding(c);
    case TaskKind::ParentChild: return parent_child(c);
    case TaskKind::PoiCoordGen: return poi_coord_gen(c);
    case TaskKind::ArrivalPoint: return arrival_point(c);
  }
  throw std::invalid_argument("make_sample: bad task kind");
}

EvalTarget truth_of(TaskKind kind, const Truth& t, const Viewport& vp) {
  auto need = [&](bool ok, const char* field) {
    if (!ok) throw std::invalid_argument(std::string(to_string(kind)) + " truth lacks '" + field + "'");
  };
  switch (kind) {
    case TaskKind::CoordGen:
    case TaskKind::Geocoding:
      need(t.point.has_value(), "point");
      return *t.point;
    case TaskKind::PoiCoordGen:
      need(t.point.has_value(), "point");
      need(t.pixel.has_value(), "pixel");
      return PixelTruth{*t.point, *t.pixel, vp};
    case TaskKind::ArrivalPoint:
      need(t.point.has_value(), "point");
      need(t.pixel.has_value(), "pixel");
      need(t.road.has_value(), "road");
      return ArrivalTruth{*t.point, *t.pixel, *t.road, vp};
    case TaskKind::ParentChild:
      need(t.label == kNoRelation || t.label == kFirstIsParent || t.label == kSecondIsParent, "label");
      return t.label;
    default:
      need(!t.label.empty(), "label");
      return t.label;
  }
}

// ---- JSON ------------------------------------------------------------------------

namespace {

nlohmann::json point_json(const GeoPoint& p) { return {{"lng", p.lng}, {"lat", p.lat}}; }
nlohmann::json pixel_json(const PixelCoord& p) { return {{"x", p.x}, {"y", p.y}}; }

}  // namespace

nlohmann::json to_json(const Viewport& vp) {
  return {{"center", point_json(vp.center)}, {"scale", vp.scale}, {"width_px", vp.width_px}, {"height_px", vp.height_px}};
}

Viewport viewport_from_json(const nlohmann::json& j) {
  Viewport vp;
  vp.center = {j.at("center").at("lng").get<double>(), j.at("center").at("lat").get<double>()};
  vp.scale = j.at("scale").get<int>();
  vp.width_px = j.at("width_px").get<int>();
  vp.height_px = j.at("height_px").get<int>();
  return vp;
}

nlohmann::json to_json(const Truth& t) {
  nlohmann::json j = nlohmann::json::object();
  if (!t.label.empty()) j["label"] = t.label;
  if (t.point) j["point"] = point_json(*t.point);
  if (t.pixel) j["pixel"] = pixel_json(*t.pixel);
  if (t.entity) j["entity"] = *t.entity;
  if (t.road) j["road"] = *t.road;
  if (t.marked) j["marked"] = pixel_json(*t.marked);
  if (t.channel_rule) j["channel_rule"] = *t.channel_rule;
  return j;
}

Truth truth_from_json(const nlohmann::json& j) {
  Truth t;
  if (j.contains("label")) t.label = j.at("label").get<std::string>();
  if (j.contains("point")) t.point = GeoPoint{j.at("point").at("lng").get<double>(), j.at("point").at("lat").get<double>()};
  if (j.contains("pixel")) t.pixel = PixelCoord{j.at("pixel").at("x").get<double>(), j.at("pixel").at("y").get<double>()};
  if (j.contains("entity")) t.entity = j.at("entity").get<EntityId>();
  if (j.contains("road")) t.road = j.at("road").get<EntityId>();
  if (j.contains("marked")) t.marked = PixelCoord{j.at("marked").at("x").get<double>(), j.at("marked").at("y").get<double>()};
  if (j.contains("channel_rule")) t.channel_rule = j.at("channel_rule").get<std::string>();
  return t;
}

std::vector<std::string> corpus_for(const world::MapWorld& world) {
  std::vector<std::string> corpus = {
      "what is at the red dot?",
      "what does the symbol mean?",
      "what is the name of the place at the green dot?",
      "what is the name of the blue area?",
      "what is the name of the orange road?",
      "what are the coordinates of the red dot?",
      "where is , ?",
      "what is the address at ?",
      "how are and related?",
      "where should be displayed?",
      "where is the arrival point of ?",
      "0123456789-.,x=y",
      std::string(kNoRelation),
      std::string(kFirstIsParent),
      std::string(kSecondIsParent),
  };
  for (auto c : render::kAllElementClasses) corpus.emplace_back(render::element_name(c));
  for (const auto& c : kMarkerColors) corpus.emplace_back(c.name);
  for (const auto& t : kTags) corpus.emplace_back(t.meaning);
  for (const auto& r : world.roads) corpus.push_back(r.name);
  for (const auto& a : world.aois) corpus.push_back(a.name);
  for (const auto& p : world.pois) {
    corpus.push_back(p.name);
    corpus.push_back(p.address);
  }
  for (const auto& d : world.district_tree.districts) corpus.push_back(d.name);
  corpus.push_back(world.district_tree.city);
  return corpus;
}

}  // namespace geodecoder::tasks
