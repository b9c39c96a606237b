// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geodecoder/geo.hpp"
#include "geodecoder/render.hpp"
#include "geodecoder/rng.hpp"
#include "geodecoder/worldgen.hpp"
#include "json.hpp"

namespace geodecoder::tasks {

using geo::GeoPoint;
using geo::PixelCoord;
using geo::Viewport;
using render::Raster;
using render::Rgb;
using world::EntityId;

enum class TaskKind {
  ElementId,
  TagId,
  PoiId,
  AoiId,
  RoadId,
  CoordGen,
  Geocoding,
  ReverseGeocoding,
  ParentChild,
  PoiCoordGen,
  ArrivalPoint,
};

inline constexpr std::array<TaskKind, 11> kAllTaskKinds = {
    TaskKind::ElementId, TaskKind::TagId,    TaskKind::PoiId,     TaskKind::AoiId,
    TaskKind::RoadId,    TaskKind::CoordGen, TaskKind::Geocoding, TaskKind::ReverseGeocoding,
    TaskKind::ParentChild, TaskKind::PoiCoordGen, TaskKind::ArrivalPoint};

std::string_view to_string(TaskKind k);
/// Throws std::invalid_argument.
TaskKind task_kind_from_string(std::string_view s);

// ---- visual vocabulary --------------------------------------------------------

struct NamedColor {
  std::string_view name;
  Rgb rgb;
};

// Marker colors; none of them collides with a base-map style color.
inline constexpr std::array<NamedColor, 8> kMarkerColors = {{
    {"red", {230, 0, 0}},
    {"green", {0, 170, 0}},
    {"blue", {0, 90, 230}},
    {"orange", {255, 140, 0}},
    {"purple", {140, 60, 200}},
    {"cyan", {0, 200, 220}},
    {"black", {20, 20, 20}},
    {"magenta", {220, 0, 160}},
}};
Rgb marker_color(std::string_view name);

struct TagDef {
  char letter;  // '\0' for the scanner marker
  std::string_view meaning;
};
inline constexpr std::array<TagDef, 8> kTags = {{
    {'P', "parking lot"},
    {'G', "gate"},
    {'H', "hospital"},
    {'S', "subway station"},
    {'B', "bus stop"},
    {'T', "public toilet"},
    {'F', "gas station"},
    {'\0', "camera capture point"},
}};
inline constexpr int kTagRadiusPx = 4;
inline constexpr int kScannerRadiusPx = 6;

inline constexpr std::string_view kNoRelation = "no relation";
inline constexpr std::string_view kFirstIsParent = "first is parent";
inline constexpr std::string_view kSecondIsParent = "second is parent";

enum class Channel { camera, waybill, user, wifi };
inline constexpr std::array<Channel, 4> kAllChannels = {Channel::camera, Channel::waybill, Channel::user, Channel::wifi};
std::string_view to_string(Channel c);
Rgb channel_color(Channel c);
/// Displacement scale in meters: toward-face offset for the camera, isotropic sigma otherwise.
double channel_noise_m(Channel c);

// ---- samples ------------------------------------------------------------------

struct SamplePolicy {
  int width_px = 96;
  int height_px = 96;
  int coarse_scale = 11;  // identification and coordinate tasks
  int fine_scale = 15;    // PoiCoordGen, ArrivalPoint
  /// ElementId draws its class uniformly from this list; empty means every class.
  std::vector<render::ElementClass> element_classes;
  /// ElementId marks only pixels whose (2r+1)-square neighbourhood is all of the answer class.
  int element_context_px = 1;
  bool arrival_heatmap = true;

  friend bool operator==(const SamplePolicy&, const SamplePolicy&) = default;
};

/// Throws ValidationError naming the offending field.
void validate(const SamplePolicy& p);

// Ground truth recorded next to each sample. Fields are filled per kind.
struct Truth {
  std::string label;                  // identification answers, parent-child class
  std::optional<GeoPoint> point;      // coordinates; display/arrival point
  std::optional<PixelCoord> pixel;    // rounded answer pixel
  std::optional<EntityId> entity;     // POI / AOI / road named by the answer
  std::optional<EntityId> road;       // ArrivalPoint road
  std::optional<PixelCoord> marked;   // pixel the visual marker points at
  std::optional<std::string> channel_rule;  // PoiCoordGen: building / indoor / street

  friend bool operator==(const Truth&, const Truth&) = default;
};

struct Sample {
  std::string id;
  TaskKind kind = TaskKind::ElementId;
  Raster raster;
  Viewport viewport;
  std::string input_text;
  std::string target_text;
  Truth truth;
};

/// Throws GenerationError when the world lacks what the kind needs or no valid scene is found.
Sample make_sample(const world::MapWorld& world, TaskKind kind, const SamplePolicy& policy, Rng& rng);

// Typed target the metrics score against.
struct ArrivalTruth {
  GeoPoint point;
  PixelCoord pixel;
  EntityId road = 0;
  Viewport viewport;
};
struct PixelTruth {
  GeoPoint point;
  PixelCoord pixel;
  Viewport viewport;
};
using EvalTarget = std::variant<std::string, GeoPoint, PixelTruth, ArrivalTruth>;

/// Throws std::invalid_argument when the kind's truth fields are missing.
EvalTarget truth_of(TaskKind kind, const Truth& truth, const Viewport& vp);
inline EvalTarget truth_of(const Sample& s) { return truth_of(s.kind, s.truth, s.viewport); }

nlohmann::json to_json(const Truth& t);
Truth truth_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Viewport& vp);
Viewport viewport_from_json(const nlohmann::json& j);

/// Every prompt fragment and answer form the factories can emit, for vocabulary building.
std::vector<std::string> corpus_for(const world::MapWorld& world);

}  // namespace geodecoder::tasks
