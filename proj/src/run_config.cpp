// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/run_config.hpp"

#include "geodecoder/error.hpp"
#include "geodecoder/fileio.hpp"
#include "geodecoder/render.hpp"
#include "geodecoder/world_io.hpp"

namespace geodecoder {

using nlohmann::json;

void RunConfig::validate() const {
  world::validate(world);
  tasks::validate(mix);
  tasks::validate(policy);
  model.validate();
  train.validate();
  if (!(eval.road_threshold_m > 0)) throw ValidationError("road_threshold_m", "must be positive");
  if (eval.max_samples < 0) throw ValidationError("max_samples", "must be non-negative");
  if (policy.width_px != model.image_size || policy.height_px != model.image_size)
    throw ValidationError("image_size", "model expects " + std::to_string(model.image_size) + " px but samples are " +
                                            std::to_string(policy.width_px) + "x" + std::to_string(policy.height_px));
}

namespace {

json policy_json(const tasks::SamplePolicy& p) {
  json classes = json::array();
  for (auto c : p.element_classes) classes.push_back(std::string(render::element_name(c)));
  return {{"width_px", p.width_px},       {"height_px", p.height_px},         {"coarse_scale", p.coarse_scale},
          {"fine_scale", p.fine_scale},   {"element_classes", classes},       {"arrival_heatmap", p.arrival_heatmap},
          {"element_context_px", p.element_context_px}};
}

template <typename T>
void get(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(field);
  } catch (const json::exception& e) {
    throw ValidationError(key, e.what());
  }
}

const json& section(const json& j, const char* key, const json& empty) {
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ValidationError(key, "expected an object");
  return j.at(key);
}

}  // namespace

json to_json(const RunConfig& c) {
  json mix = json::object();
  for (const auto& [kind, n] : c.mix) mix[std::string(tasks::to_string(kind))] = n;
  return {{"seed", c.seed},
          {"world", world::to_json(c.world)},
          {"tasks", {{"mix", mix}, {"policy", policy_json(c.policy)}}},
          {"model", c.model},
          {"train", c.train},
          {"eval", {{"road_threshold_m", c.eval.road_threshold_m}, {"max_samples", c.eval.max_samples}}},
          {"paths", {{"world", c.world_path}, {"dataset", c.dataset_dir}, {"run", c.run_dir}}}};
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config", "expected a JSON object");
  const json empty = json::object();
  RunConfig c;
  get(j, "seed", c.seed);
  if (j.contains("world")) {
    try {
      c.world = world::world_config_from_json(section(j, "world", empty));
    } catch (const json::exception& e) {
      throw ValidationError("world", e.what());
    }
  }
  const json& t = section(j, "tasks", empty);
  if (t.contains("mix")) {
    if (!t.at("mix").is_object()) throw ValidationError("mix", "expected an object of task counts");
    c.mix.clear();
    for (const auto& [name, n] : t.at("mix").items()) {
      tasks::TaskKind kind;
      try {
        kind = tasks::task_kind_from_string(name);
      } catch (const std::invalid_argument&) {
        throw ValidationError("mix", "unknown task '" + name + "'");
      }
      if (!n.is_number_integer()) throw ValidationError("mix." + name, "expected an integer");
      c.mix[kind] = n.get<int>();
    }
  }
  const json& p = section(t, "policy", empty);
  get(p, "width_px", c.policy.width_px);
  get(p, "height_px", c.policy.height_px);
  get(p, "coarse_scale", c.policy.coarse_scale);
  get(p, "fine_scale", c.policy.fine_scale);
  get(p, "arrival_heatmap", c.policy.arrival_heatmap);
  get(p, "element_context_px", c.policy.element_context_px);
  if (p.contains("element_classes")) {
    std::vector<std::string> names;
    get(p, "element_classes", names);
    c.policy.element_classes.clear();
    for (const auto& n : names) {
      try {
        c.policy.element_classes.push_back(render::element_class_from_name(n));
      } catch (const std::invalid_argument&) {
        throw ValidationError("element_classes", "unknown class '" + n + "'");
      }
    }
  }
  from_json(section(j, "model", empty), c.model);
  train::from_json(section(j, "train", empty), c.train);
  const json& e = section(j, "eval", empty);
  get(e, "road_threshold_m", c.eval.road_threshold_m);
  get(e, "max_samples", c.eval.max_samples);
  const json& paths = section(j, "paths", empty);
  get(paths, "world", c.world_path);
  get(paths, "dataset", c.dataset_dir);
  get(paths, "run", c.run_dir);
  c.validate();
  return c;
}

RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }
  return run_config_from_json(j);
}

RunConfig load_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

}  // namespace geodecoder
