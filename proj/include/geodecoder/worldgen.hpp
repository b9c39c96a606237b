// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geodecoder/geo.hpp"
#include "geodecoder/rng.hpp"

namespace geodecoder::world {

using geo::GeoPoint;
using EntityId = std::uint32_t;
using Ring = std::vector<GeoPoint>;

enum class RoadClass { major, minor };
enum class AoiCategory { residential, campus, park, mall, office };
enum class PoiCategory { shop, hotel, restaurant, office, gate, parking, station };

std::string_view to_string(RoadClass c);
std::string_view to_string(AoiCategory c);
std::string_view to_string(PoiCategory c);
RoadClass road_class_from_string(std::string_view s);
AoiCategory aoi_category_from_string(std::string_view s);
PoiCategory poi_category_from_string(std::string_view s);

struct Road {
  EntityId id = 0;
  std::string name;
  RoadClass road_class = RoadClass::minor;
  std::vector<GeoPoint> polyline;

  friend bool operator==(const Road&, const Road&) = default;
};

struct Aoi {
  EntityId id = 0;
  std::string name;
  Ring polygon;  // counterclockwise, implicitly closed
  AoiCategory category = AoiCategory::residential;
  std::optional<EntityId> parent_id;

  friend bool operator==(const Aoi&, const Aoi&) = default;
};

struct Poi {
  EntityId id = 0;
  std::string name;
  std::string address;
  GeoPoint location;
  PoiCategory category = PoiCategory::shop;
  std::uint32_t popularity_rank = 1;  // 1 = most popular
  std::optional<EntityId> parent_id;

  friend bool operator==(const Poi&, const Poi&) = default;
};

struct District {
  std::string name;
  Ring boundary;
  std::vector<EntityId> streets;

  friend bool operator==(const District&, const District&) = default;
};

struct DistrictTree {
  std::string city;
  std::vector<District> districts;

  friend bool operator==(const DistrictTree&, const DistrictTree&) = default;
};

struct WorldConfig {
  GeoPoint center{116.40, 39.90};
  double extent_x_m = 12'000.0;
  double extent_y_m = 12'000.0;
  int n_roads = 40;         // split evenly between north-south and east-west
  int major_every = 4;      // every n-th grid line is a major road
  int n_aois = 150;         // top-level AOIs, one per road cell
  int n_pois = 1200;
  int n_water = 2;
  int n_green = 6;
  double parent_fraction = 0.30;
  double child_aoi_fraction = 0.35;  // of campus/park/mall AOIs
  double in_aoi_fraction = 0.45;     // of POIs
  double min_poi_separation_m = 145.0;
  double road_buffer_m = 12.0;
  int district_rows = 3;
  int district_cols = 3;
  std::string city = "Beijing";

  friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

/// Throws ValidationError naming the offending field.
void validate(const WorldConfig& cfg);

struct Extent {
  GeoPoint south_west;
  GeoPoint north_east;

  bool contains(const GeoPoint& p) const {
    return p.lng >= south_west.lng && p.lng <= north_east.lng && p.lat >= south_west.lat &&
           p.lat <= north_east.lat;
  }
  friend bool operator==(const Extent&, const Extent&) = default;
};

struct MapWorld {
  std::vector<Road> roads;
  std::vector<Aoi> aois;
  std::vector<Poi> pois;
  std::vector<Ring> water;
  std::vector<Ring> green;
  DistrictTree district_tree;
  std::uint64_t seed = 0;
  Extent extent;
  WorldConfig config;

  const Road* find_road(EntityId id) const;
  const Aoi* find_aoi(EntityId id) const;
  const Poi* find_poi(EntityId id) const;
  /// Local metric frame centered on the world's extent.
  geo::LocalFrame frame() const;

  friend bool operator==(const MapWorld&, const MapWorld&) = default;
};

/// Deterministic in (seed, cfg). Throws GenerationError on infeasible configs.
MapWorld generate_world(std::uint64_t seed, const WorldConfig& cfg = {});

struct RoadHit {
  EntityId road_id = 0;
  double distance_m = 0.0;
};

/// Nearest road centerline; ties go to the lowest road id. Throws on an empty road set.
RoadHit nearest_road(const MapWorld& world, const GeoPoint& p);

/// Closest point on a given road's centerline.
GeoPoint closest_point_on_road(const MapWorld& world, EntityId road_id, const GeoPoint& p);

/// Draws a POI id with probability proportional to 1 / popularity_rank.
EntityId sample_poi_by_popularity(const MapWorld& world, Rng& rng);

struct SceneContext {
  std::optional<EntityId> aoi;          // innermost containing AOI
  std::vector<EntityId> containing_aois;
  RoadHit nearest_road;
  bool in_water = false;
  bool in_green = false;
  std::string city;
  std::string district;
};

/// Throws std::out_of_range when `p` lies outside the world extent.
SceneContext locate(const MapWorld& world, const GeoPoint& p);

bool ring_contains(const Ring& ring, const GeoPoint& p);
GeoPoint ring_centroid(const Ring& ring);
double ring_area_m2(const Ring& ring);

// ---- address grammar -------------------------------------------------------
//
//   <city>, <district>, <street> No.<number>[, <aoi>[, Unit <unit>]]
//
// House numbers count 10 m steps along the street centerline; units index a
// 40 m grid over the AOI's bounding box, row-major from the south-west corner.

inline constexpr double kHouseNumberStepM = 10.0;
inline constexpr double kUnitCellM = 40.0;

struct Address {
  std::string city;
  std::string district;
  std::string street;
  int number = 1;
  std::optional<std::string> aoi;
  std::optional<int> unit;

  friend bool operator==(const Address&, const Address&) = default;
};

std::string format_address(const Address& a);
/// Throws ParseError.
Address parse_address(std::string_view text);
/// Throws std::invalid_argument when names do not resolve in the district tree.
GeoPoint resolve_address(const MapWorld& world, const Address& a);
/// Canonical address for a location; `aoi` selects the unit-level suffix.
Address address_for(const MapWorld& world, const GeoPoint& p, std::optional<EntityId> aoi);

}  // namespace geodecoder::world
