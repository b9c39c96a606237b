// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "geodecoder/geo.hpp"
#include "geodecoder/taskgen.hpp"
#include "geodecoder/worldgen.hpp"

namespace geodecoder::metrics {

/// 1 iff equal after dropping a trailing "<eos>" marker and trailing whitespace.
int exact_match(std::string_view pred, std::string_view target);

/// Lower bucket edges in meters; the last bucket is open.
inline constexpr std::array<double, 5> kBucketEdges = {0.0, 100.0, 200.0, 500.0, 1000.0};

struct DistanceReport {
  double median = 0.0;
  std::array<double, 5> buckets{};  // percentages
  std::size_t n = 0;
};

/// Throws std::invalid_argument on an empty or negative input.
DistanceReport distance_report(const std::vector<double>& errors_m);
std::size_t bucket_of(double error_m);

inline constexpr double kRoadAssociationM = 15.0;

/// 1 within 30 m on the truth road, 0.5 within 50 m, else 0. A prediction is
/// on the truth road when that road is its nearest and no more than
/// `road_threshold_m` away.
double arrival_index(const geo::GeoPoint& pred, const geo::GeoPoint& truth, world::EntityId truth_road,
                     const world::MapWorld& world, double road_threshold_m = kRoadAssociationM);

struct ParentChildReport {
  std::array<double, 3> accuracy{};  // no relation, first is parent, second is parent
  std::array<std::size_t, 3> n{};
};

/// Throws std::invalid_argument on unequal lengths or a label outside the three classes.
ParentChildReport parent_child_report(const std::vector<std::string>& preds, const std::vector<std::string>& labels);

// Accumulates per-task scores; the arrival index needs the world.
class Scorer {
 public:
  explicit Scorer(const world::MapWorld* world = nullptr, double road_threshold_m = kRoadAssociationM)
      : world_(world), road_threshold_m_(road_threshold_m) {}

  void add(tasks::TaskKind kind, const tasks::EvalTarget& truth, std::string_view prediction);

  /// {"tasks": {<kind>: {...}}, "n": total}
  nlohmann::json report() const;

 private:
  struct Bucket {
    std::size_t n = 0;
    std::size_t exact = 0;
    std::size_t unparsed = 0;
    std::vector<double> errors_m;
    double arrival_sum = 0.0;
    std::vector<std::string> preds;
    std::vector<std::string> labels;
  };
  const world::MapWorld* world_;
  double road_threshold_m_;
  std::map<tasks::TaskKind, Bucket> tasks_;
};

nlohmann::json to_json(const DistanceReport& r);
nlohmann::json to_json(const ParentChildReport& r);

}  // namespace geodecoder::metrics
