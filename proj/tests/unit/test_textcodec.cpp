// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "geodecoder/error.hpp"
#include "geodecoder/rng.hpp"
#include "geodecoder/taskgen.hpp"
#include "geodecoder/textcodec.hpp"
#include "geodecoder/worldgen.hpp"

using namespace geodecoder;
using text::Vocabulary;

TEST_CASE("vocabulary build") {
  const auto v = Vocabulary::build({"ab"});
  CHECK(v.size() == 6);
  CHECK(v.token(text::kPad) == "<pad>");
  CHECK(v.token(text::kSep) == "<sep>");
  CHECK(v.token(4) == "a");
  CHECK(v.token(5) == "b");
  CHECK(Vocabulary::build({"ba", "ab"}).token(4) == "b");
  CHECK(Vocabulary::build({"ab"}) == v);
  CHECK_THROWS_AS(Vocabulary::build({}), std::invalid_argument);
  CHECK_THROWS_AS(Vocabulary::build({"abcdef"}, 8), std::invalid_argument);
}

TEST_CASE("encode and decode") {
  const auto v = Vocabulary::build({"x=0123456789,y"});
  CHECK(v.encode("").empty());
  CHECK(v.decode({}).empty());
  const auto ids = v.encode("x=12");
  CHECK(ids.size() == 4);
  for (auto id : ids) CHECK_FALSE(v.is_special(id));
  CHECK(v.decode({text::kBos, ids[0], text::kEos}) == "x");
  CHECK_THROWS_AS(v.decode({999}), std::out_of_range);
  try {
    v.encode("x=1Q");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 3);
    CHECK(std::string(e.what()).find('Q') != std::string::npos);
  }
}

TEST_CASE("decode inverts encode on corpus text") {
  const auto w = world::generate_world(7);
  const auto corpus = tasks::corpus_for(w);
  const auto v = Vocabulary::build(corpus);
  CHECK(v.size() <= 200);
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto& s = corpus[rng.index(corpus.size())];
    CHECK(v.decode(v.encode(s)) == s);
  }
}

TEST_CASE("vocabulary file round trip") {
  const auto v = Vocabulary::build({"a\\b\nc d"});
  CHECK(Vocabulary::from_file(v.to_file()) == v);
  CHECK_THROWS_AS(Vocabulary::from_file("<pad>\n<bos>\n<eos>\n<sep>\na\na\n"), ParseError);
}

TEST_CASE("coordinate text") {
  CHECK(text::format_coord({116.519630, 39.774726}) == "116.519630,39.774726");
  CHECK(text::format_coord({0, 0}) == "0.000000,0.000000");
  const auto p = text::parse_coord("116.519630,39.774726");
  CHECK(p.lng == doctest::Approx(116.519630).epsilon(1e-12));
  CHECK(p.lat == doctest::Approx(39.774726).epsilon(1e-12));
  for (const char* bad : {"", "116.5,39.7", "116.519630, 39.774726", "116.519630,39.774726,", "a.000000,0.000000"})
    CHECK_THROWS_AS(text::parse_coord(bad), ParseError);

  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const geo::GeoPoint q{rng.uniform(-180.0, 180.0), rng.uniform(-90.0, 90.0)};
    const auto back = text::parse_coord(text::format_coord(q));
    CHECK(std::abs(back.lng - q.lng) < 1e-6);
    CHECK(std::abs(back.lat - q.lat) < 1e-6);
  }
}

TEST_CASE("pixel text") {
  CHECK(text::format_pixel({112.0, 112.0}) == "x=112,y=112");
  CHECK(text::format_pixel({10.5, 3.4}) == "x=11,y=3");
  CHECK_THROWS_AS(text::format_pixel({-1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(text::format_pixel({0.0, 10000.0}), std::invalid_argument);
  CHECK_THROWS_AS(text::parse_pixel("x=1;y=2"), ParseError);
  CHECK_THROWS_AS(text::parse_pixel("x=,y=2"), ParseError);
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const geo::PixelCoord q{rng.uniform(0.0, 9999.0), rng.uniform(0.0, 9999.0)};
    const auto back = text::parse_pixel(text::format_pixel(q));
    CHECK(std::abs(back.x - q.x) <= 0.5);
    CHECK(std::abs(back.y - q.y) <= 0.5);
  }
}
