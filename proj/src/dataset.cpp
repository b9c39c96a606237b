// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/dataset.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>

#include "geodecoder/error.hpp"
#include "geodecoder/fileio.hpp"
#include "geodecoder/parallel.hpp"

namespace geodecoder::tasks {

TaskMix default_mix(int total) {
  if (total < 0) throw ValidationError("total", "must be non-negative");
  static constexpr std::array<std::pair<TaskKind, long long>, 8> kReference = {{
      {TaskKind::ElementId, 296'636},
      {TaskKind::TagId, 495'309},
      {TaskKind::PoiId, 5'725'200},
      {TaskKind::AoiId, 4'618'350},
      {TaskKind::RoadId, 668'622},
      {TaskKind::CoordGen, 1'324'625},
      {TaskKind::Geocoding, 5'198'512},
      {TaskKind::ReverseGeocoding, 3'858'043},
  }};
  long long sum = 0;
  for (const auto& [k, n] : kReference) sum += n;
  TaskMix mix;
  std::vector<std::pair<long long, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < kReference.size(); ++i) {
    const long long scaled = kReference[i].second * total;
    mix[kReference[i].first] = static_cast<int>(scaled / sum);
    assigned += static_cast<int>(scaled / sum);
    remainders.emplace_back(scaled % sum, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) mix[kReference[remainders[r].second].first] += 1;
  return mix;
}

void validate(const TaskMix& mix) {
  for (const auto& [k, n] : mix)
    if (n < 0) throw ValidationError("mix." + std::string(to_string(k)), "count must be non-negative");
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

Split split_of(std::string_view id) {
  const auto bucket = fnv1a(id) % 100;
  if (bucket < 90) return Split::train;
  if (bucket < 95) return Split::val;
  return Split::test;
}

namespace {

nlohmann::json row_json(const ManifestRow& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["kind"] = std::string(to_string(r.kind));
  j["image"] = r.image;
  j["input_text"] = r.input_text;
  j["target_text"] = r.target_text;
  j["truth"] = to_json(r.truth);
  j["viewport"] = to_json(r.viewport);
  j["split"] = std::string(to_string(r.split));
  j["manifest_format"] = kManifestFormat;
  return j;
}

}  // namespace

std::string serialize_manifest(const Manifest& m) {
  std::string out;
  for (const auto& r : m) out += row_json(r).dump() + "\n";
  return out;
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty()) {
      try {
        const auto j = nlohmann::json::parse(line);
        if (j.at("manifest_format").get<int>() != kManifestFormat)
          throw ParseError("manifest: unsupported manifest_format", pos);
        ManifestRow r;
        r.id = j.at("id").get<std::string>();
        r.kind = task_kind_from_string(j.at("kind").get<std::string>());
        r.image = j.at("image").get<std::string>();
        r.input_text = j.at("input_text").get<std::string>();
        r.target_text = j.at("target_text").get<std::string>();
        r.truth = truth_from_json(j.at("truth"));
        r.viewport = viewport_from_json(j.at("viewport"));
        r.split = split_from_string(j.at("split").get<std::string>());
        m.push_back(std::move(r));
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what(), pos);
      }
    }
    pos = eol + 1;
  }
  return m;
}

void DirectorySink::write(const std::string& relative_path, std::string_view bytes) {
  const auto path = root_ / relative_path;
  if (!force_ && std::filesystem::exists(path))
    throw IoError("refusing to overwrite existing file " + path.string() + " (pass --force)");
  write_file(path, bytes);
}

Manifest build_dataset(const world::MapWorld& world, const TaskMix& mix, std::uint64_t seed, DatasetSink& sink,
                       const SamplePolicy& policy, int threads) {
  validate(mix);
  validate(policy);
  std::vector<TaskKind> plan;
  for (auto k : kAllTaskKinds) {
    const auto it = mix.find(k);
    if (it != mix.end()) plan.insert(plan.end(), static_cast<std::size_t>(it->second), k);
  }
  Manifest manifest(plan.size());
  std::vector<std::string> images(plan.size());
  // Samples are generated independently from per-index substreams and written in index order.
  constexpr std::size_t kChunk = 64;
  for (std::size_t base = 0; base < plan.size(); base += kChunk) {
    const std::size_t end = std::min(plan.size(), base + kChunk);
    parallel_for(
        end - base,
        [&](std::size_t off) {
          const std::size_t i = base + off;
          Rng rng(hash_combine(seed, i));
          Sample s = make_sample(world, plan[i], policy, rng);
          char id[32];
          std::snprintf(id, sizeof id, "s%07zu", i);
          ManifestRow& r = manifest[i];
          r.id = id;
          r.kind = plan[i];
          r.image = "images/" + r.id + ".ppm";
          r.input_text = std::move(s.input_text);
          r.target_text = std::move(s.target_text);
          r.truth = std::move(s.truth);
          r.viewport = s.viewport;
          r.split = split_of(r.id);
          images[i] = render::write_ppm(s.raster);
        },
        threads);
    for (std::size_t i = base; i < end; ++i) {
      sink.write(manifest[i].image, images[i]);
      std::string().swap(images[i]);
    }
  }
  sink.write(std::string(kManifestFile), serialize_manifest(manifest));
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& dataset_dir) {
  return parse_manifest(read_file(dataset_dir / kManifestFile));
}

Sample load_sample(const std::filesystem::path& dataset_dir, const ManifestRow& row) {
  Sample s;
  s.id = row.id;
  s.kind = row.kind;
  s.raster = render::read_ppm(read_file(dataset_dir / row.image));
  s.viewport = row.viewport;
  s.input_text = row.input_text;
  s.target_text = row.target_text;
  s.truth = row.truth;
  return s;
}

}  // namespace geodecoder::tasks
