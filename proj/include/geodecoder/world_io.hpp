// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "geodecoder/worldgen.hpp"
#include "json.hpp"

namespace geodecoder::world {

inline constexpr int kWorldFormat = 1;

nlohmann::json to_json(const WorldConfig& cfg);
/// Missing fields keep their defaults.
WorldConfig world_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MapWorld& world);
/// Throws ParseError on a wrong `world_format` or missing fields.
MapWorld world_from_json(const nlohmann::json& j);

std::string serialize_world(const MapWorld& world);
MapWorld deserialize_world(const std::string& text);

void save_world(const MapWorld& world, const std::filesystem::path& path);
MapWorld load_world(const std::filesystem::path& path);

}  // namespace geodecoder::world
