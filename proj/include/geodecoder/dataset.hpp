// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "geodecoder/taskgen.hpp"

namespace geodecoder::tasks {

inline constexpr int kManifestFormat = 1;
inline constexpr std::string_view kManifestFile = "manifest.jsonl";

using TaskMix = std::map<TaskKind, int>;

/// Pretraining mix proportional to the per-task sample counts of the reference
/// corpus, rescaled to `total` by largest remainder.
TaskMix default_mix(int total = 20'000);
/// Throws ValidationError on a negative count.
void validate(const TaskMix& mix);

enum class Split { train, val, test };
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);
/// 90 / 5 / 5 by FNV-1a of the sample id.
Split split_of(std::string_view id);

struct ManifestRow {
  std::string id;
  TaskKind kind = TaskKind::ElementId;
  std::string image;  // relative to the dataset directory
  std::string input_text;
  std::string target_text;
  Truth truth;
  Viewport viewport;
  Split split = Split::train;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};
using Manifest = std::vector<ManifestRow>;

std::string serialize_manifest(const Manifest& m);
/// Throws ParseError naming the byte offset of the bad line.
Manifest parse_manifest(std::string_view text);

// Destination for generated files.
class DatasetSink {
 public:
  virtual ~DatasetSink() = default;
  virtual void write(const std::string& relative_path, std::string_view bytes) = 0;
};

// Writes under a root directory; refuses to overwrite unless `force`.
class DirectorySink : public DatasetSink {
 public:
  DirectorySink(std::filesystem::path root, bool force) : root_(std::move(root)), force_(force) {}
  void write(const std::string& relative_path, std::string_view bytes) override;

 private:
  std::filesystem::path root_;
  bool force_;
};

// Keeps files in memory; used by tests and digests.
class MemorySink : public DatasetSink {
 public:
  void write(const std::string& relative_path, std::string_view bytes) override { files[relative_path] = std::string(bytes); }
  std::map<std::string, std::string> files;
};

/// Deterministic in (world, mix, seed, policy) regardless of `threads`.
Manifest build_dataset(const world::MapWorld& world, const TaskMix& mix, std::uint64_t seed, DatasetSink& sink,
                       const SamplePolicy& policy = {}, int threads = 1);

Manifest load_manifest(const std::filesystem::path& dataset_dir);
/// Reads the row's PPM and rebuilds the sample.
Sample load_sample(const std::filesystem::path& dataset_dir, const ManifestRow& row);

}  // namespace geodecoder::tasks
