// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/worldgen.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "geodecoder/error.hpp"

namespace geodecoder::world {

using geo::LocalFrame;
using geo::Vec2;

// ---- enum names ------------------------------------------------------------

std::string_view to_string(RoadClass c) { return c == RoadClass::major ? "major" : "minor"; }

std::string_view to_string(AoiCategory c) {
  switch (c) {
    case AoiCategory::residential: return "residential";
    case AoiCategory::campus: return "campus";
    case AoiCategory::park: return "park";
    case AoiCategory::mall: return "mall";
    case AoiCategory::office: return "office";
  }
  return "?";
}

std::string_view to_string(PoiCategory c) {
  switch (c) {
    case PoiCategory::shop: return "shop";
    case PoiCategory::hotel: return "hotel";
    case PoiCategory::restaurant: return "restaurant";
    case PoiCategory::office: return "office";
    case PoiCategory::gate: return "gate";
    case PoiCategory::parking: return "parking";
    case PoiCategory::station: return "station";
  }
  return "?";
}

RoadClass road_class_from_string(std::string_view s) {
  if (s == "major") return RoadClass::major;
  if (s == "minor") return RoadClass::minor;
  throw std::invalid_argument("unknown road class '" + std::string(s) + "'");
}

AoiCategory aoi_category_from_string(std::string_view s) {
  for (auto c : {AoiCategory::residential, AoiCategory::campus, AoiCategory::park, AoiCategory::mall,
                 AoiCategory::office}) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown AOI category '" + std::string(s) + "'");
}

PoiCategory poi_category_from_string(std::string_view s) {
  for (auto c : {PoiCategory::shop, PoiCategory::hotel, PoiCategory::restaurant, PoiCategory::office,
                 PoiCategory::gate, PoiCategory::parking, PoiCategory::station}) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown POI category '" + std::string(s) + "'");
}

// ---- MapWorld --------------------------------------------------------------

const Road* MapWorld::find_road(EntityId id) const {
  for (const auto& r : roads)
    if (r.id == id) return &r;
  return nullptr;
}

const Aoi* MapWorld::find_aoi(EntityId id) const {
  for (const auto& a : aois)
    if (a.id == id) return &a;
  return nullptr;
}

const Poi* MapWorld::find_poi(EntityId id) const {
  for (const auto& p : pois)
    if (p.id == id) return &p;
  return nullptr;
}

geo::LocalFrame MapWorld::frame() const {
  return LocalFrame({(extent.south_west.lng + extent.north_east.lng) / 2.0,
                     (extent.south_west.lat + extent.north_east.lat) / 2.0});
}

void validate(const WorldConfig& cfg) {
  if (!geo::is_valid(cfg.center)) throw ValidationError("center", "not a valid lng/lat");
  if (!(cfg.extent_x_m > 0)) throw ValidationError("extent_x_m", "must be positive");
  if (!(cfg.extent_y_m > 0)) throw ValidationError("extent_y_m", "must be positive");
  if (cfg.n_roads < 4) throw ValidationError("n_roads", "need at least 4 roads to form a cell");
  if (cfg.major_every <= 0) throw ValidationError("major_every", "must be positive");
  if (cfg.n_aois <= 0) throw ValidationError("n_aois", "must be positive");
  if (cfg.n_pois <= 0) throw ValidationError("n_pois", "must be positive");
  if (cfg.n_water < 0) throw ValidationError("n_water", "must be non-negative");
  if (cfg.n_green < 0) throw ValidationError("n_green", "must be non-negative");
  if (cfg.parent_fraction < 0 || cfg.parent_fraction > 1) throw ValidationError("parent_fraction", "must lie in [0, 1]");
  if (cfg.child_aoi_fraction < 0 || cfg.child_aoi_fraction > 1)
    throw ValidationError("child_aoi_fraction", "must lie in [0, 1]");
  if (cfg.in_aoi_fraction < 0 || cfg.in_aoi_fraction > 1) throw ValidationError("in_aoi_fraction", "must lie in [0, 1]");
  if (cfg.min_poi_separation_m < 0) throw ValidationError("min_poi_separation_m", "must be non-negative");
  if (cfg.road_buffer_m < 0 || cfg.road_buffer_m >= 15.0)
    throw ValidationError("road_buffer_m", "must lie in [0, 15) so roadside POIs stay placeable");
  if (cfg.district_rows <= 0) throw ValidationError("district_rows", "must be positive");
  if (cfg.district_cols <= 0) throw ValidationError("district_cols", "must be positive");
  if (cfg.city.empty() || cfg.city.find(',') != std::string::npos)
    throw ValidationError("city", "must be non-empty and comma-free");
}

// ---- geometry helpers ------------------------------------------------------

namespace {

std::vector<Vec2> to_local(const LocalFrame& f, const std::vector<GeoPoint>& pts) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(f.to_local(p));
  return out;
}

Ring to_geo(const LocalFrame& f, const std::vector<Vec2>& pts) {
  Ring out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(f.to_geo(p));
  return out;
}

struct PolylineProjection {
  double distance = std::numeric_limits<double>::infinity();
  double arclength = 0.0;
  Vec2 closest;
};

PolylineProjection project_to_polyline(Vec2 p, const std::vector<Vec2>& line) {
  PolylineProjection best;
  double walked = 0.0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const auto sp = geo::project_to_segment(p, line[i], line[i + 1]);
    const double seg_len = geo::norm(line[i + 1] - line[i]);
    if (sp.distance < best.distance) {
      best.distance = sp.distance;
      best.arclength = walked + sp.t * seg_len;
      best.closest = sp.closest;
    }
    walked += seg_len;
  }
  return best;
}

double polyline_length(const std::vector<Vec2>& line) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) s += geo::norm(line[i + 1] - line[i]);
  return s;
}

struct PointAndNormal {
  Vec2 point;
  Vec2 normal;  // unit, left of travel direction
};

PointAndNormal point_at_arclength(const std::vector<Vec2>& line, double s) {
  double walked = 0.0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec2 d = line[i + 1] - line[i];
    const double len = geo::norm(d);
    if (walked + len >= s || i + 2 == line.size()) {
      const double t = len > 0 ? std::clamp((s - walked) / len, 0.0, 1.0) : 0.0;
      const Vec2 u = len > 0 ? d * (1.0 / len) : Vec2{1, 0};
      return {line[i] + d * t, {-u.y, u.x}};
    }
    walked += len;
  }
  return {line.front(), {0, 1}};
}

struct Rect {
  double x0, y0, x1, y1;
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  Rect inset(double d) const { return {x0 + d, y0 + d, x1 - d, y1 - d}; }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

std::vector<Vec2> rect_ring(const Rect& r) { return {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}}; }

std::vector<Vec2> chamfered_ring(const Rect& r, double c) {
  return {{r.x0 + c, r.y0}, {r.x1 - c, r.y0}, {r.x1, r.y0 + c}, {r.x1, r.y1 - c},
          {r.x1 - c, r.y1}, {r.x0 + c, r.y1}, {r.x0, r.y1 - c}, {r.x0, r.y0 + c}};
}

Rect bounding_rect(const std::vector<Vec2>& ring) {
  Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (auto v : ring) {
    r.x0 = std::min(r.x0, v.x);
    r.y0 = std::min(r.y0, v.y);
    r.x1 = std::max(r.x1, v.x);
    r.y1 = std::max(r.y1, v.y);
  }
  return r;
}

// Unique pinyin-style words for entity names.
class NamePool {
 public:
  explicit NamePool(Rng rng) : rng_(std::move(rng)) {}

  std::string word() {
    static constexpr std::array<std::string_view, 48> kSyllables = {
        "an",  "bao",  "chang", "da",   "dong", "fang", "feng",  "gu",   "hai", "he",   "hong", "hua",
        "jia", "jin",  "jing",  "kang", "lan",  "li",   "long",  "mei",  "ming", "nan", "ning", "ping",
        "qing", "rui", "shan",  "sheng", "shi", "tai",  "tian",  "wan",  "wei", "xi",   "xin",  "xing",
        "ya",  "yang", "yi",    "yong", "yu",   "yuan", "yun",   "ze",   "zhen", "zhong", "zhu", "zi"};
    for (int attempt = 0; attempt < 100000; ++attempt) {
      std::string w(kSyllables[rng_.index(kSyllables.size())]);
      w += kSyllables[rng_.index(kSyllables.size())];
      w[0] = static_cast<char>(w[0] - 'a' + 'A');
      if (used_.insert(w).second) return w;
    }
    throw GenerationError("name pool exhausted: too many named entities for the syllable inventory");
  }

 private:
  Rng rng_;
  std::unordered_set<std::string> used_;
};

template <typename T, std::size_t N>
const T& pick(Rng& rng, const std::array<T, N>& xs) {
  return xs[rng.index(N)];
}

std::string_view aoi_noun(AoiCategory c, Rng& rng) {
  switch (c) {
    case AoiCategory::residential: return pick(rng, std::array<std::string_view, 3>{"Garden", "Residence", "Apartments"});
    case AoiCategory::campus: return pick(rng, std::array<std::string_view, 2>{"University", "College"});
    case AoiCategory::park: return "Park";
    case AoiCategory::mall: return pick(rng, std::array<std::string_view, 2>{"Mall", "Plaza"});
    case AoiCategory::office: return pick(rng, std::array<std::string_view, 2>{"Tower", "Center"});
  }
  return "Area";
}

std::string_view poi_noun(PoiCategory c, Rng& rng) {
  switch (c) {
    case PoiCategory::shop: return pick(rng, std::array<std::string_view, 3>{"Mart", "Store", "Boutique"});
    case PoiCategory::hotel: return pick(rng, std::array<std::string_view, 2>{"Hotel", "Inn"});
    case PoiCategory::restaurant: return pick(rng, std::array<std::string_view, 3>{"Restaurant", "Noodle House", "Cafe"});
    case PoiCategory::office: return pick(rng, std::array<std::string_view, 2>{"Office", "Company"});
    case PoiCategory::gate: return "Gate";
    case PoiCategory::parking: return "Parking";
    case PoiCategory::station: return pick(rng, std::array<std::string_view, 2>{"Station", "Bus Stop"});
  }
  return "Place";
}

std::vector<std::string_view> child_poi_suffixes(PoiCategory c) {
  switch (c) {
    case PoiCategory::gate: return {"North Gate", "South Gate", "East Gate", "West Gate"};
    case PoiCategory::parking: return {"Parking Lot", "Underground Parking"};
    case PoiCategory::restaurant: return {"Canteen", "Cafe"};
    case PoiCategory::shop: return {"Store", "Bookshop"};
    case PoiCategory::office: return {"Admin Office", "Service Center"};
    case PoiCategory::hotel: return {"Guest House"};
    case PoiCategory::station: return {"Shuttle Stop"};
  }
  return {"Annex"};
}

struct ChildAoiTemplate {
  std::vector<std::string_view> suffixes;
  AoiCategory category;
};

ChildAoiTemplate child_aoi_template(AoiCategory parent) {
  switch (parent) {
    case AoiCategory::campus:
      return {{"Dept. of Electronics", "Dept. of Physics", "School of Law", "Library", "Sports Center"},
              AoiCategory::office};
    case AoiCategory::park: return {{"Lake Garden", "Flower Hall", "Playground"}, AoiCategory::park};
    case AoiCategory::mall: return {{"Food Court", "East Wing", "Cinema"}, AoiCategory::mall};
    default: return {{}, parent};
  }
}

AoiCategory draw_aoi_category(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.40) return AoiCategory::residential;
  if (u < 0.60) return AoiCategory::office;
  if (u < 0.70) return AoiCategory::mall;
  if (u < 0.85) return AoiCategory::campus;
  return AoiCategory::park;
}

const Road& road_by_name(const MapWorld& w, std::string_view name) {
  for (const auto& r : w.roads)
    if (r.name == name) return r;
  throw std::invalid_argument("unknown street '" + std::string(name) + "'");
}

const Aoi& aoi_by_name(const MapWorld& w, std::string_view name) {
  for (const auto& a : w.aois)
    if (a.name == name) return a;
  throw std::invalid_argument("unknown AOI '" + std::string(name) + "'");
}

struct UnitGrid {
  Rect box;
  int cols;
  int rows;
};

UnitGrid unit_grid(const LocalFrame& f, const Aoi& aoi) {
  const Rect box = bounding_rect(to_local(f, aoi.polygon));
  const int cols = std::max(1, static_cast<int>(std::ceil(box.width() / kUnitCellM)));
  const int rows = std::max(1, static_cast<int>(std::ceil(box.height() / kUnitCellM)));
  return {box, cols, rows};
}

}  // namespace

bool ring_contains(const Ring& ring, const GeoPoint& p) {
  std::vector<Vec2> pts;
  pts.reserve(ring.size());
  for (const auto& g : ring) pts.push_back({g.lng, g.lat});
  return geo::point_in_ring({p.lng, p.lat}, pts);
}

GeoPoint ring_centroid(const Ring& ring) {
  const LocalFrame f(ring.front());
  return f.to_geo(geo::centroid(to_local(f, ring)));
}

double ring_area_m2(const Ring& ring) {
  const LocalFrame f(ring.front());
  return std::abs(geo::signed_area(to_local(f, ring)));
}

// ---- queries ---------------------------------------------------------------

RoadHit nearest_road(const MapWorld& world, const GeoPoint& p) {
  if (world.roads.empty()) throw std::invalid_argument("nearest_road: world has no roads");
  const LocalFrame f = world.frame();
  const Vec2 q = f.to_local(p);
  RoadHit best{0, std::numeric_limits<double>::infinity()};
  for (const auto& road : world.roads) {
    const double d = project_to_polyline(q, to_local(f, road.polyline)).distance;
    if (d < best.distance_m || (d == best.distance_m && road.id < best.road_id)) best = {road.id, d};
  }
  return best;
}

GeoPoint closest_point_on_road(const MapWorld& world, EntityId road_id, const GeoPoint& p) {
  const Road* road = world.find_road(road_id);
  if (road == nullptr) throw std::invalid_argument("unknown road id " + std::to_string(road_id));
  const LocalFrame f = world.frame();
  return f.to_geo(project_to_polyline(f.to_local(p), to_local(f, road->polyline)).closest);
}

EntityId sample_poi_by_popularity(const MapWorld& world, Rng& rng) {
  if (world.pois.empty()) throw std::invalid_argument("sample_poi_by_popularity: world has no POIs");
  std::vector<double> cumulative;
  cumulative.reserve(world.pois.size());
  double total = 0.0;
  for (const auto& p : world.pois) {
    total += 1.0 / static_cast<double>(p.popularity_rank);
    cumulative.push_back(total);
  }
  const double u = rng.uniform() * total;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return world.pois[static_cast<std::size_t>(it - cumulative.begin())].id;
}

SceneContext locate(const MapWorld& world, const GeoPoint& p) {
  if (!world.extent.contains(p)) throw std::out_of_range("locate: point outside world extent");
  SceneContext ctx;
  double best_area = std::numeric_limits<double>::infinity();
  for (const auto& a : world.aois) {
    if (!ring_contains(a.polygon, p)) continue;
    ctx.containing_aois.push_back(a.id);
    const double area = ring_area_m2(a.polygon);
    if (area < best_area) {
      best_area = area;
      ctx.aoi = a.id;
    }
  }
  if (!world.roads.empty()) ctx.nearest_road = nearest_road(world, p);
  ctx.in_water = std::any_of(world.water.begin(), world.water.end(), [&](const Ring& r) { return ring_contains(r, p); });
  ctx.in_green = std::any_of(world.green.begin(), world.green.end(), [&](const Ring& r) { return ring_contains(r, p); });
  ctx.city = world.district_tree.city;
  for (const auto& d : world.district_tree.districts) {
    if (ring_contains(d.boundary, p)) {
      ctx.district = d.name;
      break;
    }
  }
  return ctx;
}

// ---- addresses -------------------------------------------------------------

std::string format_address(const Address& a) {
  std::string s = a.city + ", " + a.district + ", " + a.street + " No." + std::to_string(a.number);
  if (a.aoi) {
    s += ", " + *a.aoi;
    if (a.unit) s += ", Unit " + std::to_string(*a.unit);
  }
  return s;
}

namespace {

int parse_positive(std::string_view digits, std::size_t offset) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size() || v <= 0) {
    throw ParseError("address: expected a positive integer, got '" + std::string(digits) + "'", offset);
  }
  return v;
}

}  // namespace

Address parse_address(std::string_view text) {
  std::vector<std::pair<std::string_view, std::size_t>> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(", ", start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start), start);
      break;
    }
    parts.emplace_back(text.substr(start, pos - start), start);
    start = pos + 2;
  }
  if (parts.size() < 3 || parts.size() > 5) {
    throw ParseError("address: expected 3 to 5 comma-separated fields, got " + std::to_string(parts.size()), 0);
  }
  for (const auto& [p, off] : parts) {
    if (p.empty()) throw ParseError("address: empty field", off);
  }
  Address a;
  a.city = parts[0].first;
  a.district = parts[1].first;
  const auto [street_part, street_off] = parts[2];
  const std::size_t no = street_part.rfind(" No.");
  if (no == std::string_view::npos || no == 0) throw ParseError("address: street field lacks ' No.<n>'", street_off);
  a.street = street_part.substr(0, no);
  a.number = parse_positive(street_part.substr(no + 4), street_off + no + 4);
  if (parts.size() >= 4) a.aoi = std::string(parts[3].first);
  if (parts.size() == 5) {
    const auto [unit_part, unit_off] = parts[4];
    if (!unit_part.starts_with("Unit ")) throw ParseError("address: expected 'Unit <n>'", unit_off);
    a.unit = parse_positive(unit_part.substr(5), unit_off + 5);
  }
  return a;
}

GeoPoint resolve_address(const MapWorld& world, const Address& a) {
  if (a.city != world.district_tree.city) throw std::invalid_argument("unknown city '" + a.city + "'");
  const District* district = nullptr;
  for (const auto& d : world.district_tree.districts)
    if (d.name == a.district) district = &d;
  if (district == nullptr) throw std::invalid_argument("unknown district '" + a.district + "'");
  const Road& road = road_by_name(world, a.street);
  if (std::find(district->streets.begin(), district->streets.end(), road.id) == district->streets.end()) {
    throw std::invalid_argument("street '" + a.street + "' is not in district '" + a.district + "'");
  }
  const LocalFrame f = world.frame();
  if (a.aoi) {
    const Aoi& aoi = aoi_by_name(world, *a.aoi);
    if (!a.unit) return ring_centroid(aoi.polygon);
    const UnitGrid g = unit_grid(f, aoi);
    const int idx = *a.unit - 1;
    if (idx >= g.cols * g.rows) throw std::invalid_argument("unit " + std::to_string(*a.unit) + " outside AOI grid");
    const int row = idx / g.cols;
    const int col = idx % g.cols;
    return f.to_geo({g.box.x0 + (col + 0.5) * kUnitCellM, g.box.y0 + (row + 0.5) * kUnitCellM});
  }
  const auto line = to_local(f, road.polyline);
  const double s = std::min(a.number * kHouseNumberStepM, polyline_length(line));
  return f.to_geo(point_at_arclength(line, s).point);
}

Address address_for(const MapWorld& world, const GeoPoint& p, std::optional<EntityId> aoi_id) {
  const LocalFrame f = world.frame();
  Address a;
  a.city = world.district_tree.city;
  for (const auto& d : world.district_tree.districts) {
    if (ring_contains(d.boundary, p)) {
      a.district = d.name;
      break;
    }
  }
  const RoadHit hit = nearest_road(world, p);
  const Road& road = *world.find_road(hit.road_id);
  a.street = road.name;
  const auto proj = project_to_polyline(f.to_local(p), to_local(f, road.polyline));
  a.number = std::max(1, static_cast<int>(std::lround(proj.arclength / kHouseNumberStepM)));
  if (aoi_id) {
    const Aoi* aoi = world.find_aoi(*aoi_id);
    if (aoi == nullptr) throw std::invalid_argument("unknown AOI id " + std::to_string(*aoi_id));
    a.aoi = aoi->name;
    const UnitGrid g = unit_grid(f, *aoi);
    const Vec2 q = f.to_local(p);
    const int col = std::clamp(static_cast<int>((q.x - g.box.x0) / kUnitCellM), 0, g.cols - 1);
    const int row = std::clamp(static_cast<int>((q.y - g.box.y0) / kUnitCellM), 0, g.rows - 1);
    a.unit = row * g.cols + col + 1;
  }
  return a;
}

// ---- generation ------------------------------------------------------------

MapWorld generate_world(std::uint64_t seed, const WorldConfig& cfg) {
  validate(cfg);
  Rng rng(seed);
  Rng layout_rng = rng.substream(1);
  Rng shape_rng = rng.substream(2);
  Rng poi_rng = rng.substream(3);
  NamePool names(rng.substream(4));
  Rng name_rng = rng.substream(5);

  const LocalFrame frame(cfg.center);
  const double half_w = cfg.extent_x_m / 2.0;
  const double half_h = cfg.extent_y_m / 2.0;

  MapWorld world;
  world.seed = seed;
  world.config = cfg;
  world.extent = {frame.to_geo({-half_w, -half_h}), frame.to_geo({half_w, half_h})};
  world.district_tree.city = cfg.city;

  const int n_vertical = cfg.n_roads / 2;
  const int n_horizontal = cfg.n_roads - n_vertical;
  const double sx = cfg.extent_x_m / n_vertical;
  const double sy = cfg.extent_y_m / n_horizontal;
  const int n_cells = (n_vertical - 1) * (n_horizontal - 1);
  if (cfg.n_aois + cfg.n_water + cfg.n_green > n_cells) {
    throw GenerationError("infeasible config: n_aois + n_water + n_green = " +
                          std::to_string(cfg.n_aois + cfg.n_water + cfg.n_green) + " exceeds the " +
                          std::to_string(n_cells) + " cells enclosed by the road grid");
  }

  std::vector<double> xs(n_vertical);
  std::vector<double> ys(n_horizontal);
  for (int i = 0; i < n_vertical; ++i) xs[i] = -half_w + sx * (i + 0.5) + layout_rng.uniform(-0.15, 0.15) * sx;
  for (int j = 0; j < n_horizontal; ++j) ys[j] = -half_h + sy * (j + 0.5) + layout_rng.uniform(-0.15, 0.15) * sy;

  EntityId next_id = 1;
  constexpr double kWiggle = 15.0;

  // Roads: a perturbed grid. Vertices sit at every crossing and at the extent edge.
  std::vector<std::vector<Vec2>> road_lines;
  auto add_road = [&](std::vector<Vec2> line, bool major) {
    Road r;
    r.id = next_id++;
    r.road_class = major ? RoadClass::major : RoadClass::minor;
    r.name = names.word() + (major ? " Avenue" : (r.id % 2 == 0 ? " Road" : " Street"));
    r.polyline = to_geo(frame, line);
    road_lines.push_back(std::move(line));
    world.roads.push_back(std::move(r));
  };
  for (int i = 0; i < n_vertical; ++i) {
    std::vector<Vec2> line;
    line.push_back({xs[i] + layout_rng.uniform(-kWiggle, kWiggle), -half_h});
    for (double y : ys) line.push_back({xs[i] + layout_rng.uniform(-kWiggle, kWiggle), y});
    line.push_back({xs[i] + layout_rng.uniform(-kWiggle, kWiggle), half_h});
    add_road(std::move(line), i % cfg.major_every == 1 % cfg.major_every);
  }
  for (int j = 0; j < n_horizontal; ++j) {
    std::vector<Vec2> line;
    line.push_back({-half_w, ys[j] + layout_rng.uniform(-kWiggle, kWiggle)});
    for (double x : xs) line.push_back({x, ys[j] + layout_rng.uniform(-kWiggle, kWiggle)});
    line.push_back({half_w, ys[j] + layout_rng.uniform(-kWiggle, kWiggle)});
    add_road(std::move(line), j % cfg.major_every == 1 % cfg.major_every);
  }

  // Cells between adjacent grid lines host water, green space, or one AOI each.
  std::vector<Rect> cells;
  for (int i = 0; i + 1 < n_vertical; ++i)
    for (int j = 0; j + 1 < n_horizontal; ++j) cells.push_back({xs[i], ys[j], xs[i + 1], ys[j + 1]});
  for (std::size_t k = cells.size(); k > 1; --k) std::swap(cells[k - 1], cells[layout_rng.index(k)]);

  std::size_t next_cell = 0;
  std::vector<std::vector<Vec2>> water_local;
  for (int k = 0; k < cfg.n_water; ++k) {
    const Rect r = cells[next_cell++].inset(shape_rng.uniform(40.0, 70.0));
    auto ring = chamfered_ring(r, 0.25 * std::min(r.width(), r.height()));
    world.water.push_back(to_geo(frame, ring));
    water_local.push_back(std::move(ring));
  }
  for (int k = 0; k < cfg.n_green; ++k) {
    const Rect r = cells[next_cell++].inset(shape_rng.uniform(40.0, 70.0));
    world.green.push_back(to_geo(frame, chamfered_ring(r, shape_rng.uniform(0.1, 0.3) * std::min(r.width(), r.height()))));
  }

  struct AoiLocal {
    Rect rect;
    bool is_child;
    std::size_t index;  // into world.aois
    std::vector<Rect> child_rects;
  };
  std::vector<AoiLocal> aoi_local;
  for (int k = 0; k < cfg.n_aois; ++k) {
    const Rect cell = cells[next_cell++];
    const Rect r{cell.x0 + shape_rng.uniform(60.0, 110.0), cell.y0 + shape_rng.uniform(60.0, 110.0),
                 cell.x1 - shape_rng.uniform(60.0, 110.0), cell.y1 - shape_rng.uniform(60.0, 110.0)};
    Aoi a;
    a.id = next_id++;
    a.category = draw_aoi_category(shape_rng);
    a.name = names.word() + " " + std::string(aoi_noun(a.category, name_rng));
    a.polygon = to_geo(frame, rect_ring(r));
    const std::size_t parent_index = world.aois.size();
    world.aois.push_back(a);
    aoi_local.push_back({r, false, parent_index, {}});

    const auto tmpl = child_aoi_template(a.category);
    if (!tmpl.suffixes.empty() && shape_rng.bernoulli(cfg.child_aoi_fraction)) {
      const double cw = r.width() * shape_rng.uniform(0.35, 0.45);
      const double ch = r.height() * shape_rng.uniform(0.35, 0.45);
      const bool east = shape_rng.bernoulli(0.5);
      const bool north = shape_rng.bernoulli(0.5);
      const double x0 = east ? r.x1 - 15.0 - cw : r.x0 + 15.0;
      const double y0 = north ? r.y1 - 15.0 - ch : r.y0 + 15.0;
      const Rect cr{x0, y0, x0 + cw, y0 + ch};
      Aoi child;
      child.id = next_id++;
      child.category = tmpl.category;
      child.name = a.name + " " + std::string(tmpl.suffixes[name_rng.index(tmpl.suffixes.size())]);
      child.polygon = to_geo(frame, rect_ring(cr));
      child.parent_id = a.id;
      aoi_local.back().child_rects.push_back(cr);
      aoi_local.push_back({cr, true, world.aois.size(), {}});
      world.aois.push_back(std::move(child));
    }
  }

  // POIs. Placement enforces separation, the road buffer, and the water mask.
  std::vector<Vec2> placed;
  auto separated = [&](Vec2 p) {
    const double min2 = cfg.min_poi_separation_m * cfg.min_poi_separation_m;
    for (const auto& q : placed) {
      const Vec2 d = p - q;
      if (geo::dot(d, d) < min2) return false;
    }
    return true;
  };
  auto clear_of_roads = [&](Vec2 p) {
    for (const auto& line : road_lines)
      if (project_to_polyline(p, line).distance < cfg.road_buffer_m) return false;
    return true;
  };
  auto in_water = [&](Vec2 p) {
    return std::any_of(water_local.begin(), water_local.end(), [&](const auto& r) { return geo::point_in_ring(p, r); });
  };

  const int n_child_target = static_cast<int>(std::lround(cfg.parent_fraction * cfg.n_pois));
  const int n_in_aoi = std::min(cfg.n_pois, std::max(n_child_target, static_cast<int>(std::lround(cfg.in_aoi_fraction * cfg.n_pois))));
  std::vector<std::size_t> host_aois;
  for (std::size_t k = 0; k < aoi_local.size(); ++k)
    if (!aoi_local[k].is_child) host_aois.push_back(k);

  struct PendingPoi {
    Vec2 at;
    std::optional<std::size_t> host;  // index into aoi_local
  };
  std::vector<PendingPoi> pending;
  const int kMaxAttempts = 400 * cfg.n_pois;
  int attempts = 0;
  while (static_cast<int>(pending.size()) < n_in_aoi) {
    if (++attempts > kMaxAttempts) {
      throw GenerationError("could not place " + std::to_string(n_in_aoi) + " POIs inside AOIs with min_poi_separation_m = " +
                            std::to_string(cfg.min_poi_separation_m));
    }
    const std::size_t host = host_aois[poi_rng.index(host_aois.size())];
    const Rect r = aoi_local[host].rect.inset(15.0);
    const Vec2 p{poi_rng.uniform(r.x0, r.x1), poi_rng.uniform(r.y0, r.y1)};
    bool in_child = false;
    for (const auto& c : aoi_local[host].child_rects) in_child = in_child || c.inset(-10.0).contains(p);
    if (in_child || !separated(p)) continue;
    placed.push_back(p);
    pending.push_back({p, host});
  }
  const double margin = 20.0;
  while (static_cast<int>(pending.size()) < cfg.n_pois) {
    if (++attempts > kMaxAttempts) {
      throw GenerationError("could not place " + std::to_string(cfg.n_pois) +
                            " POIs along roads with min_poi_separation_m = " + std::to_string(cfg.min_poi_separation_m));
    }
    const auto& line = road_lines[poi_rng.index(road_lines.size())];
    const double len = polyline_length(line);
    const auto pn = point_at_arclength(line, poi_rng.uniform(40.0, len - 40.0));
    const double side = poi_rng.bernoulli(0.5) ? 1.0 : -1.0;
    const Vec2 p = pn.point + pn.normal * (side * poi_rng.uniform(15.0, 35.0));
    if (std::abs(p.x) > half_w - margin || std::abs(p.y) > half_h - margin) continue;
    bool in_aoi = false;
    for (const auto& a : aoi_local) in_aoi = in_aoi || a.rect.contains(p);
    if (in_aoi || in_water(p) || !clear_of_roads(p) || !separated(p)) continue;
    placed.push_back(p);
    pending.push_back({p, std::nullopt});
  }
  // In-AOI POIs also need the road buffer and water checks; AOI rects keep them clear by construction.

  std::vector<std::uint32_t> ranks(cfg.n_pois);
  for (int k = 0; k < cfg.n_pois; ++k) ranks[k] = static_cast<std::uint32_t>(k + 1);
  for (std::size_t k = ranks.size(); k > 1; --k) std::swap(ranks[k - 1], ranks[poi_rng.index(k)]);

  std::set<std::string> child_names;
  for (std::size_t k = 0; k < pending.size(); ++k) {
    const auto& pp = pending[k];
    Poi poi;
    poi.id = next_id++;
    poi.location = frame.to_geo(pp.at);
    poi.popularity_rank = ranks[k];
    if (pp.host && static_cast<int>(k) < n_child_target) {
      const Aoi& parent = world.aois[aoi_local[*pp.host].index];
      static constexpr std::array<PoiCategory, 7> kAll = {PoiCategory::shop,    PoiCategory::hotel,   PoiCategory::restaurant,
                                                          PoiCategory::office,  PoiCategory::gate,    PoiCategory::parking,
                                                          PoiCategory::station};
      poi.category = kAll[name_rng.index(kAll.size())];
      const auto suffixes = child_poi_suffixes(poi.category);
      std::string name;
      for (std::size_t t = 0; t < suffixes.size() && name.empty(); ++t) {
        std::string cand = parent.name + " " + std::string(suffixes[(t + name_rng.index(suffixes.size())) % suffixes.size()]);
        if (!child_names.contains(cand)) name = cand;
      }
      for (int n = 2; name.empty(); ++n) {
        std::string cand = parent.name + " " + std::string(suffixes.front()) + " " + std::to_string(n);
        if (!child_names.contains(cand)) name = cand;
      }
      child_names.insert(name);
      poi.name = std::move(name);
      poi.parent_id = parent.id;
    } else {
      static constexpr std::array<PoiCategory, 4> kInAoi = {PoiCategory::shop, PoiCategory::restaurant, PoiCategory::office,
                                                            PoiCategory::hotel};
      static constexpr std::array<PoiCategory, 6> kStreet = {PoiCategory::shop,    PoiCategory::restaurant, PoiCategory::hotel,
                                                             PoiCategory::parking, PoiCategory::station,    PoiCategory::office};
      poi.category = pp.host ? kInAoi[name_rng.index(kInAoi.size())] : kStreet[name_rng.index(kStreet.size())];
      poi.name = names.word() + " " + std::string(poi_noun(poi.category, name_rng));
    }
    world.pois.push_back(std::move(poi));
  }

  // Districts: a regular grid over the extent; streets are roads that pass through.
  for (int r = 0; r < cfg.district_rows; ++r) {
    for (int c = 0; c < cfg.district_cols; ++c) {
      const Rect box{-half_w + cfg.extent_x_m * c / cfg.district_cols, -half_h + cfg.extent_y_m * r / cfg.district_rows,
                     -half_w + cfg.extent_x_m * (c + 1) / cfg.district_cols,
                     -half_h + cfg.extent_y_m * (r + 1) / cfg.district_rows};
      District d;
      d.name = names.word() + " District";
      d.boundary = to_geo(frame, rect_ring(box));
      for (std::size_t k = 0; k < road_lines.size(); ++k) {
        const auto& line = road_lines[k];
        const double len = polyline_length(line);
        bool inside = false;
        for (double s = 0.0; s <= len && !inside; s += 20.0) inside = box.contains(point_at_arclength(line, s).point);
        if (inside) d.streets.push_back(world.roads[k].id);
      }
      world.district_tree.districts.push_back(std::move(d));
    }
  }

  for (std::size_t k = 0; k < world.pois.size(); ++k) {
    auto& poi = world.pois[k];
    std::optional<EntityId> host;
    if (pending[k].host) host = world.aois[aoi_local[*pending[k].host].index].id;
    const Address a = address_for(world, poi.location, host);
    for (auto& d : world.district_tree.districts) {
      if (d.name != a.district) continue;
      const EntityId street = road_by_name(world, a.street).id;
      if (std::find(d.streets.begin(), d.streets.end(), street) == d.streets.end()) {
        d.streets.push_back(street);
        std::sort(d.streets.begin(), d.streets.end());
      }
    }
    poi.address = format_address(a);
  }
  return world;
}

}  // namespace geodecoder::world
