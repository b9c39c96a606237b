// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "geodecoder/error.hpp"
#include "geodecoder/textcodec.hpp"

namespace geodecoder::metrics {

namespace {

std::string_view trim_answer(std::string_view s) {
  constexpr std::string_view kEos = "<eos>";
  for (;;) {
    const std::size_t before = s.size();
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= kEos.size() && s.substr(s.size() - kEos.size()) == kEos) s.remove_suffix(kEos.size());
    if (s.size() == before) return s;
  }
}

int parent_child_class(std::string_view label) {
  if (label == tasks::kNoRelation) return 0;
  if (label == tasks::kFirstIsParent) return 1;
  if (label == tasks::kSecondIsParent) return 2;
  return -1;
}

}  // namespace

int exact_match(std::string_view pred, std::string_view target) {
  return trim_answer(pred) == trim_answer(target) ? 1 : 0;
}

std::size_t bucket_of(double error_m) {
  std::size_t b = 0;
  while (b + 1 < kBucketEdges.size() && error_m >= kBucketEdges[b + 1]) ++b;
  return b;
}

DistanceReport distance_report(const std::vector<double>& errors_m) {
  if (errors_m.empty()) throw std::invalid_argument("distance_report: no errors");
  DistanceReport r;
  r.n = errors_m.size();
  std::array<std::size_t, 5> counts{};
  for (double e : errors_m) {
    if (!(e >= 0)) throw std::invalid_argument("distance_report: negative or NaN error");
    ++counts[bucket_of(e)];
  }
  for (std::size_t i = 0; i < counts.size(); ++i) r.buckets[i] = 100.0 * static_cast<double>(counts[i]) / static_cast<double>(r.n);
  std::vector<double> sorted = errors_m;
  std::sort(sorted.begin(), sorted.end());
  r.median = sorted[(sorted.size() - 1) / 2];
  return r;
}

double arrival_index(const geo::GeoPoint& pred, const geo::GeoPoint& truth, world::EntityId truth_road,
                     const world::MapWorld& world, double road_threshold_m) {
  const world::RoadHit hit = world::nearest_road(world, pred);
  if (hit.road_id != truth_road || hit.distance_m > road_threshold_m) return 0.0;
  const double d = geo::haversine(pred, truth);
  if (d < 30.0) return 1.0;
  if (d < 50.0) return 0.5;
  return 0.0;
}

ParentChildReport parent_child_report(const std::vector<std::string>& preds, const std::vector<std::string>& labels) {
  if (preds.size() != labels.size()) throw std::invalid_argument("parent_child_report: length mismatch");
  ParentChildReport r;
  std::array<std::size_t, 3> correct{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = parent_child_class(labels[i]);
    if (c < 0) throw std::invalid_argument("parent_child_report: unknown label '" + labels[i] + "'");
    ++r.n[static_cast<std::size_t>(c)];
    if (exact_match(preds[i], labels[i])) ++correct[static_cast<std::size_t>(c)];
  }
  for (std::size_t c = 0; c < 3; ++c)
    r.accuracy[c] = r.n[c] ? static_cast<double>(correct[c]) / static_cast<double>(r.n[c]) : 0.0;
  return r;
}

void Scorer::add(tasks::TaskKind kind, const tasks::EvalTarget& truth, std::string_view prediction) {
  Bucket& b = tasks_[kind];
  ++b.n;
  const std::string_view pred = trim_answer(prediction);
  constexpr double kMiss = std::numeric_limits<double>::infinity();
  if (const auto* s = std::get_if<std::string>(&truth)) {
    b.exact += static_cast<std::size_t>(exact_match(pred, *s));
    if (kind == tasks::TaskKind::ParentChild) {
      b.preds.emplace_back(pred);
      b.labels.push_back(*s);
    }
  } else if (const auto* p = std::get_if<geo::GeoPoint>(&truth)) {
    try {
      b.errors_m.push_back(geo::haversine(text::parse_coord(pred), *p));
    } catch (const ParseError&) {
      ++b.unparsed;
      b.errors_m.push_back(kMiss);
    }
  } else if (const auto* px = std::get_if<tasks::PixelTruth>(&truth)) {
    try {
      b.errors_m.push_back(geo::haversine(geo::unproject(text::parse_pixel(pred), px->viewport), px->point));
    } catch (const ParseError&) {
      ++b.unparsed;
      b.errors_m.push_back(kMiss);
    }
  } else if (const auto* a = std::get_if<tasks::ArrivalTruth>(&truth)) {
    if (!world_) throw std::invalid_argument("Scorer: arrival points need a world");
    try {
      const geo::GeoPoint g = geo::unproject(text::parse_pixel(pred), a->viewport);
      b.arrival_sum += arrival_index(g, a->point, a->road, *world_, road_threshold_m_);
    } catch (const ParseError&) {
      ++b.unparsed;
    }
  }
}

nlohmann::json to_json(const DistanceReport& r) {
  nlohmann::json buckets = nlohmann::json::array();
  for (double b : r.buckets) buckets.push_back(b);
  nlohmann::json j{{"n", r.n}, {"buckets_pct", buckets}};
  j["median_m"] = std::isfinite(r.median) ? nlohmann::json(r.median) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const ParentChildReport& r) {
  return {{"no_relation", {{"accuracy", r.accuracy[0]}, {"n", r.n[0]}}},
          {"first_is_parent", {{"accuracy", r.accuracy[1]}, {"n", r.n[1]}}},
          {"second_is_parent", {{"accuracy", r.accuracy[2]}, {"n", r.n[2]}}}};
}

nlohmann::json Scorer::report() const {
  nlohmann::json out{{"tasks", nlohmann::json::object()}};
  std::size_t total = 0;
  for (const auto& [kind, b] : tasks_) {
    nlohmann::json t{{"n", b.n}};
    total += b.n;
    switch (kind) {
      case tasks::TaskKind::CoordGen:
      case tasks::TaskKind::Geocoding:
      case tasks::TaskKind::PoiCoordGen:
        t["distance"] = to_json(distance_report(b.errors_m));
        t["unparsed"] = b.unparsed;
        break;
      case tasks::TaskKind::ArrivalPoint:
        t["arrival_index_pct"] = 100.0 * b.arrival_sum / static_cast<double>(b.n);
        t["unparsed"] = b.unparsed;
        break;
      default:
        t["accuracy"] = static_cast<double>(b.exact) / static_cast<double>(b.n);
        if (kind == tasks::TaskKind::ParentChild) t["classes"] = to_json(parent_child_report(b.preds, b.labels));
        break;
    }
    out["tasks"][std::string(tasks::to_string(kind))] = t;
  }
  out["n"] = total;
  return out;
}

}  // namespace geodecoder::metrics
