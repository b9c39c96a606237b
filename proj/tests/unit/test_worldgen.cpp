// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "geodecoder/error.hpp"
#include "geodecoder/rng.hpp"
#include "geodecoder/world_io.hpp"
#include "geodecoder/worldgen.hpp"

using namespace geodecoder;
using world::GeoPoint;
using world::MapWorld;

namespace {

const MapWorld& shared_world() {
  static const MapWorld w = world::generate_world(7);
  return w;
}

// Brute force: every segment sampled at 1 m steps.
double sampled_road_distance(const MapWorld& w, const GeoPoint& p, world::EntityId* best_id) {
  const geo::LocalFrame f = w.frame();
  const geo::Vec2 q = f.to_local(p);
  double best = 1e300;
  for (const auto& r : w.roads) {
    for (std::size_t i = 0; i + 1 < r.polyline.size(); ++i) {
      const geo::Vec2 a = f.to_local(r.polyline[i]);
      const geo::Vec2 b = f.to_local(r.polyline[i + 1]);
      const double len = geo::norm(b - a);
      const int steps = static_cast<int>(std::ceil(len));
      for (int s = 0; s <= steps; ++s) {
        const geo::Vec2 pt = a + (b - a) * (static_cast<double>(s) / steps);
        const double d = geo::norm(q - pt);
        if (d < best) {
          best = d;
          if (best_id) *best_id = r.id;
        }
      }
    }
  }
  return best;
}

// Even-odd ray cast in raw degrees, written without the library's frame code.
bool raycast(const world::Ring& ring, const GeoPoint& p) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const auto& a = ring[i];
    const auto& b = ring[j];
    if ((a.lat > p.lat) != (b.lat > p.lat) && p.lng < (b.lng - a.lng) * (p.lat - a.lat) / (b.lat - a.lat) + a.lng)
      inside = !inside;
  }
  return inside;
}

}  // namespace

TEST_CASE("generate_world is deterministic") {
  const auto a = world::serialize_world(world::generate_world(7));
  const auto b = world::serialize_world(world::generate_world(7));
  CHECK(a == b);
  CHECK(a != world::serialize_world(world::generate_world(8)));
}

TEST_CASE("world invariants") {
  const MapWorld& w = shared_world();
  CHECK(w.roads.size() == 40);
  CHECK(w.aois.size() >= 150);
  CHECK(w.pois.size() == 1200);

  std::set<std::string> road_names;
  for (const auto& r : w.roads) {
    CHECK(r.polyline.size() >= 2);
    for (std::size_t i = 0; i + 1 < r.polyline.size(); ++i) CHECK_FALSE(r.polyline[i] == r.polyline[i + 1]);
    road_names.insert(r.name);
  }
  CHECK(road_names.size() == w.roads.size());

  const geo::LocalFrame f = w.frame();
  for (const auto& a : w.aois) {
    std::vector<geo::Vec2> ring;
    for (const auto& p : a.polygon) ring.push_back(f.to_local(p));
    CHECK(ring.size() >= 3);
    CHECK(geo::is_simple(ring));
    CHECK(geo::signed_area(ring) > 0);
  }

  std::set<std::uint32_t> ranks;
  for (const auto& p : w.pois) {
    ranks.insert(p.popularity_rank);
    for (const auto& water : w.water) CHECK_FALSE(world::ring_contains(water, p.location));
    CHECK(world::nearest_road(w, p.location).distance_m >= w.config.road_buffer_m);
  }
  CHECK(ranks.size() == w.pois.size());
  CHECK(*ranks.begin() == 1);
  CHECK(*ranks.rbegin() == w.pois.size());
}

TEST_CASE("parent links are contained and name-prefixed") {
  const MapWorld& w = shared_world();
  std::size_t prefixed = 0;
  for (const auto& p : w.pois) {
    if (!p.parent_id) continue;
    const auto* parent = w.find_aoi(*p.parent_id);
    REQUIRE(parent != nullptr);
    CHECK(world::ring_contains(parent->polygon, p.location));
    if (p.name.rfind(parent->name, 0) == 0) ++prefixed;
  }
  for (const auto& a : w.aois) {
    if (!a.parent_id) continue;
    const auto* parent = w.find_aoi(*a.parent_id);
    REQUIRE(parent != nullptr);
    for (const auto& v : a.polygon) CHECK(world::ring_contains(parent->polygon, v));
    if (a.name.rfind(parent->name, 0) == 0) ++prefixed;
  }
  CHECK(static_cast<double>(prefixed) >= w.config.parent_fraction * w.config.n_pois / 2);
}

TEST_CASE("addresses round trip through the grammar") {
  const MapWorld& w = shared_world();
  for (const auto& p : w.pois) {
    const auto a = world::parse_address(p.address);
    CHECK(world::format_address(a) == p.address);
    CHECK(geo::haversine(world::resolve_address(w, a), p.location) <= 50.0);
  }
  CHECK_THROWS_AS(world::parse_address("Beijing"), ParseError);
}

TEST_CASE("nearest_road matches a sampled brute force") {
  const MapWorld& w = shared_world();
  const auto& v = w.roads[3].polyline[1];
  const auto on_vertex = world::nearest_road(w, v);
  CHECK(on_vertex.distance_m == doctest::Approx(0.0).epsilon(1e-6));

  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const GeoPoint p{rng.uniform(w.extent.south_west.lng, w.extent.north_east.lng),
                     rng.uniform(w.extent.south_west.lat, w.extent.north_east.lat)};
    world::EntityId id = 0;
    const double d = sampled_road_distance(w, p, &id);
    const auto hit = world::nearest_road(w, p);
    CHECK(std::abs(hit.distance_m - d) <= 0.5);
  }
}

TEST_CASE("nearest_road between two parallel roads") {
  MapWorld w;
  w.extent = {{116.39, 39.89}, {116.41, 39.91}};
  const double dlat = 200.0 / geo::kMetersPerDegreeLat;
  w.roads.push_back({1, "North Road", world::RoadClass::minor, {{116.395, 39.9 + dlat}, {116.405, 39.9 + dlat}}});
  w.roads.push_back({2, "South Road", world::RoadClass::minor, {{116.395, 39.9 - dlat}, {116.405, 39.9 - dlat}}});
  w.config.center = {116.40, 39.90};
  const auto hit = world::nearest_road(w, {116.40, 39.90});
  CHECK(hit.distance_m == doctest::Approx(200.0).epsilon(0.5 / 200.0));
  CHECK(hit.road_id == 1);  // tie goes to the lowest id
  MapWorld empty;
  CHECK_THROWS(world::nearest_road(empty, {116.40, 39.90}));
}

TEST_CASE("popularity sampling follows Zipf(1)") {
  MapWorld one;
  one.pois.push_back({5, "Only", "", {116.4, 39.9}, world::PoiCategory::shop, 1, {}});
  Rng r0(1);
  for (int i = 0; i < 10; ++i) CHECK(world::sample_poi_by_popularity(one, r0) == 5);

  MapWorld two;
  two.pois.push_back({1, "A", "", {116.4, 39.9}, world::PoiCategory::shop, 1, {}});
  two.pois.push_back({2, "B", "", {116.4, 39.9}, world::PoiCategory::shop, 2, {}});
  Rng r1(2);
  int a = 0, b = 0;
  for (int i = 0; i < 100000; ++i) (world::sample_poi_by_popularity(two, r1) == 1 ? a : b)++;
  CHECK(static_cast<double>(a) / b == doctest::Approx(2.0).epsilon(0.05));

  MapWorld hundred;
  for (std::uint32_t k = 1; k <= 100; ++k)
    hundred.pois.push_back({k, "P" + std::to_string(k), "", {116.4, 39.9}, world::PoiCategory::shop, k, {}});
  Rng r2(3);
  int top = 0;
  for (int i = 0; i < 100000; ++i) top += world::sample_poi_by_popularity(hundred, r2) == 1;
  // 1 / H(100), H(100) = 5.187378
  CHECK(std::abs(top / 100000.0 - 1.0 / 5.187378) <= 0.01);
}

TEST_CASE("locate matches a ray-cast oracle") {
  const MapWorld& w = shared_world();
  for (const auto& a : w.aois) {
    if (a.parent_id) continue;
    const auto ctx = world::locate(w, world::ring_centroid(a.polygon));
    CHECK(std::find(ctx.containing_aois.begin(), ctx.containing_aois.end(), a.id) != ctx.containing_aois.end());
  }
  for (const auto& water : w.water) CHECK(world::locate(w, world::ring_centroid(water)).in_water);

  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const GeoPoint p{rng.uniform(w.extent.south_west.lng, w.extent.north_east.lng),
                     rng.uniform(w.extent.south_west.lat, w.extent.north_east.lat)};
    std::vector<world::EntityId> expect;
    for (const auto& a : w.aois)
      if (raycast(a.polygon, p)) expect.push_back(a.id);
    auto got = world::locate(w, p).containing_aois;
    std::sort(expect.begin(), expect.end());
    std::sort(got.begin(), got.end());
    CHECK(got == expect);
  }
  CHECK_THROWS_AS(world::locate(w, {0.0, 0.0}), std::out_of_range);
}

TEST_CASE("world serialization round trip") {
  const MapWorld& w = shared_world();
  const auto text = world::serialize_world(w);
  CHECK(world::deserialize_world(text) == w);
  CHECK(nlohmann::json::parse(text).at("world_format") == world::kWorldFormat);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    world::WorldConfig cfg;
    cfg.n_pois = 300;
    cfg.n_aois = 60;
    const auto g = world::generate_world(seed, cfg);
    CHECK(world::deserialize_world(world::serialize_world(g)) == g);
  }
}

TEST_CASE("infeasible configs are rejected") {
  world::WorldConfig cfg;
  cfg.n_aois = 100000;
  CHECK_THROWS(world::generate_world(1, cfg));
  cfg = {};
  cfg.n_roads = -1;
  CHECK_THROWS_AS(world::validate(cfg), ValidationError);
}
