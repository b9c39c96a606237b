// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/world_io.hpp"

#include "geodecoder/error.hpp"
#include "geodecoder/fileio.hpp"

namespace geodecoder::world {

using nlohmann::json;

namespace {

json point_json(const GeoPoint& p) { return {{"lng", p.lng}, {"lat", p.lat}}; }

GeoPoint point_from(const json& j) { return {j.at("lng").get<double>(), j.at("lat").get<double>()}; }

json ring_json(const std::vector<GeoPoint>& ring) {
  json a = json::array();
  for (const auto& p : ring) a.push_back(point_json(p));
  return a;
}

std::vector<GeoPoint> ring_from(const json& j) {
  std::vector<GeoPoint> out;
  for (const auto& p : j) out.push_back(point_from(p));
  return out;
}

json optional_id(const std::optional<EntityId>& id) { return id ? json(*id) : json(nullptr); }

std::optional<EntityId> optional_id_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<EntityId>();
}

}  // namespace

json to_json(const WorldConfig& c) {
  return {{"center", point_json(c.center)},
          {"extent_x_m", c.extent_x_m},
          {"extent_y_m", c.extent_y_m},
          {"n_roads", c.n_roads},
          {"major_every", c.major_every},
          {"n_aois", c.n_aois},
          {"n_pois", c.n_pois},
          {"n_water", c.n_water},
          {"n_green", c.n_green},
          {"parent_fraction", c.parent_fraction},
          {"child_aoi_fraction", c.child_aoi_fraction},
          {"in_aoi_fraction", c.in_aoi_fraction},
          {"min_poi_separation_m", c.min_poi_separation_m},
          {"road_buffer_m", c.road_buffer_m},
          {"district_rows", c.district_rows},
          {"district_cols", c.district_cols},
          {"city", c.city}};
}

WorldConfig world_config_from_json(const json& j) {
  WorldConfig c;
  if (j.contains("center")) c.center = point_from(j.at("center"));
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("extent_x_m", c.extent_x_m);
  get("extent_y_m", c.extent_y_m);
  get("n_roads", c.n_roads);
  get("major_every", c.major_every);
  get("n_aois", c.n_aois);
  get("n_pois", c.n_pois);
  get("n_water", c.n_water);
  get("n_green", c.n_green);
  get("parent_fraction", c.parent_fraction);
  get("child_aoi_fraction", c.child_aoi_fraction);
  get("in_aoi_fraction", c.in_aoi_fraction);
  get("min_poi_separation_m", c.min_poi_separation_m);
  get("road_buffer_m", c.road_buffer_m);
  get("district_rows", c.district_rows);
  get("district_cols", c.district_cols);
  get("city", c.city);
  return c;
}

json to_json(const MapWorld& w) {
  json roads = json::array();
  for (const auto& r : w.roads) {
    roads.push_back({{"id", r.id}, {"name", r.name}, {"class", to_string(r.road_class)}, {"polyline", ring_json(r.polyline)}});
  }
  json aois = json::array();
  for (const auto& a : w.aois) {
    aois.push_back({{"id", a.id},
                    {"name", a.name},
                    {"polygon", ring_json(a.polygon)},
                    {"category", to_string(a.category)},
                    {"parent_id", optional_id(a.parent_id)}});
  }
  json pois = json::array();
  for (const auto& p : w.pois) {
    pois.push_back({{"id", p.id},
                    {"name", p.name},
                    {"address", p.address},
                    {"location", point_json(p.location)},
                    {"category", to_string(p.category)},
                    {"popularity_rank", p.popularity_rank},
                    {"parent_id", optional_id(p.parent_id)}});
  }
  json water = json::array();
  for (const auto& r : w.water) water.push_back(ring_json(r));
  json green = json::array();
  for (const auto& r : w.green) green.push_back(ring_json(r));
  json districts = json::array();
  for (const auto& d : w.district_tree.districts) {
    districts.push_back({{"name", d.name}, {"boundary", ring_json(d.boundary)}, {"streets", d.streets}});
  }
  return {{"world_format", kWorldFormat},
          {"seed", w.seed},
          {"extent", {{"south_west", point_json(w.extent.south_west)}, {"north_east", point_json(w.extent.north_east)}}},
          {"config", to_json(w.config)},
          {"roads", roads},
          {"aois", aois},
          {"pois", pois},
          {"water", water},
          {"green", green},
          {"district_tree", {{"city", w.district_tree.city}, {"districts", districts}}}};
}

MapWorld world_from_json(const json& j) {
  if (!j.is_object() || !j.contains("world_format")) throw ParseError("world: missing world_format", 0);
  if (j.at("world_format").get<int>() != kWorldFormat) {
    throw ParseError("world: unsupported world_format " + j.at("world_format").dump(), 0);
  }
  try {
    MapWorld w;
    w.seed = j.at("seed").get<std::uint64_t>();
    w.extent = {point_from(j.at("extent").at("south_west")), point_from(j.at("extent").at("north_east"))};
    w.config = world_config_from_json(j.at("config"));
    for (const auto& r : j.at("roads")) {
      w.roads.push_back({r.at("id").get<EntityId>(), r.at("name").get<std::string>(),
                         road_class_from_string(r.at("class").get<std::string>()), ring_from(r.at("polyline"))});
    }
    for (const auto& a : j.at("aois")) {
      w.aois.push_back({a.at("id").get<EntityId>(), a.at("name").get<std::string>(), ring_from(a.at("polygon")),
                        aoi_category_from_string(a.at("category").get<std::string>()), optional_id_from(a.at("parent_id"))});
    }
    for (const auto& p : j.at("pois")) {
      w.pois.push_back({p.at("id").get<EntityId>(), p.at("name").get<std::string>(), p.at("address").get<std::string>(),
                        point_from(p.at("location")), poi_category_from_string(p.at("category").get<std::string>()),
                        p.at("popularity_rank").get<std::uint32_t>(), optional_id_from(p.at("parent_id"))});
    }
    for (const auto& r : j.at("water")) w.water.push_back(ring_from(r));
    for (const auto& r : j.at("green")) w.green.push_back(ring_from(r));
    const auto& tree = j.at("district_tree");
    w.district_tree.city = tree.at("city").get<std::string>();
    for (const auto& d : tree.at("districts")) {
      w.district_tree.districts.push_back(
          {d.at("name").get<std::string>(), ring_from(d.at("boundary")), d.at("streets").get<std::vector<EntityId>>()});
    }
    return w;
  } catch (const json::exception& e) {
    throw ParseError(std::string("world: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("world: ") + e.what(), 0);
  }
}

std::string serialize_world(const MapWorld& world) { return to_json(world).dump(1) + "\n"; }

MapWorld deserialize_world(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("world: ") + e.what(), e.byte);
  }
  return world_from_json(j);
}

void save_world(const MapWorld& world, const std::filesystem::path& path) { write_file(path, serialize_world(world)); }

MapWorld load_world(const std::filesystem::path& path) { return deserialize_world(read_file(path)); }

}  // namespace geodecoder::world
