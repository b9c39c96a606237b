// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "geodecoder/dataset.hpp"
#include "geodecoder/metrics.hpp"
#include "geodecoder/model.hpp"
#include "geodecoder/taskgen.hpp"
#include "geodecoder/trainer.hpp"
#include "geodecoder/worldgen.hpp"

namespace geodecoder {

struct EvalSettings {
  double road_threshold_m = metrics::kRoadAssociationM;
  /// Caps the number of evaluated rows; 0 evaluates the whole split.
  int max_samples = 0;

  friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

// One document governing a full run. Relative paths resolve against the
// working directory.
struct RunConfig {
  std::uint64_t seed = 0;
  world::WorldConfig world;
  tasks::TaskMix mix = tasks::default_mix();
  tasks::SamplePolicy policy;
  model::GeoDecoderConfig model;
  train::TrainHyper train;
  EvalSettings eval;
  std::string world_path = "world.json";
  std::string dataset_dir = "dataset";
  std::string run_dir = "run";

  /// Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const RunConfig& c);
/// Absent fields take their defaults; the result is validated.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig parse_run_config(std::string_view text);
/// Throws IoError when the file cannot be read, ValidationError otherwise.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace geodecoder
