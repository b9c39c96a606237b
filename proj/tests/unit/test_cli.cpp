// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "geodecoder/cli.hpp"
#include "geodecoder/error.hpp"
#include "geodecoder/fileio.hpp"
#include "geodecoder/run_config.hpp"

using namespace geodecoder;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "geodecoder");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("geodecoder_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("empty config takes defaults") {
  const RunConfig c = parse_run_config("{}");
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.epochs == 20);
  CHECK(c.train.peak_lr == 1e-4);
  CHECK(c.train.beta2 == 0.98);
  CHECK(c.train.warmup == 100);
  CHECK(c.train.dropout == 0.1);
  CHECK(c.model == model::GeoDecoderConfig::desk());
  CHECK(c.mix == tasks::default_mix());
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config errors name the field") {
  try {
    parse_run_config(R"({"train": {"batch_size": -4}})");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("batch_size") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"image_size": 64}, "tasks": {"policy": {"width_px": 96}}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_run_config("{"), ParseError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("config round trip") {
  RunConfig c = parse_run_config(R"({"seed": 9, "train": {"steps": 12}, "tasks": {"mix": {"TagId": 5}}})");
  CHECK(c.seed == 9);
  CHECK(c.mix.size() == 1);
  CHECK(run_config_from_json(to_json(c)) == c);
  c = parse_run_config("{}");
  CHECK(parse_run_config(to_json(c).dump()) == c);
}

TEST_CASE("worldgen is deterministic and refuses to overwrite") {
  const auto d = fresh_dir("cli_world");
  const auto a = (d / "a.json").string(), b = (d / "b.json").string();
  CHECK(run({"worldgen", "--seed", "7", "--out", a}).code == 0);
  CHECK(run({"worldgen", "--seed", "7", "--out", b}).code == 0);
  CHECK(read_file(a) == read_file(b));
  const auto again = run({"worldgen", "--seed", "7", "--out", a});
  CHECK(again.code == cli::kExitIo);
  CHECK(again.err.find("--force") != std::string::npos);
  CHECK(run({"worldgen", "--seed", "8", "--out", a, "--force"}).code == 0);
  CHECK(read_file(a) != read_file(b));
  fs::remove_all(d);
}

TEST_CASE("usage errors") {
  CHECK(run({"frobnicate"}).code == cli::kExitValidation);
  CHECK(run({"worldgen", "--bogus"}).code == cli::kExitValidation);
  CHECK(run({}).code == cli::kExitValidation);
  CHECK(run({"infer", "--checkpoint", "/nonexistent.ckpt", "--image", "x.ppm", "--prompt", "hi"}).code == cli::kExitIo);
  CHECK(run({"render", "--kind", "NoSuchKind", "--out", "/tmp/x.ppm"}).code == cli::kExitValidation);
}

TEST_CASE("end to end on a small TagId set") {
  const auto d = fresh_dir("cli_e2e");
  nlohmann::json cfg = {
      {"seed", 3},
      {"world", {{"n_pois", 300}, {"n_aois", 60}}},
      {"tasks", {{"mix", {{"TagId", 60}}}}},
      {"train", {{"steps", 2}, {"batch_size", 4}, {"warmup", 1}}},
      {"paths", {{"world", (d / "world.json").string()}, {"dataset", (d / "data").string()}, {"run", (d / "run").string()}}}};
  const auto cfg_path = (d / "run.json").string();
  write_file(cfg_path, cfg.dump(2));

  CHECK(run({"worldgen", "--config", cfg_path}).code == 0);
  const auto dg = run({"datagen", "--config", cfg_path});
  REQUIRE(dg.code == 0);
  CHECK(fs::exists(d / "data" / "manifest.jsonl"));
  CHECK(fs::exists(d / "data" / "vocab.txt"));

  const auto tr = run({"train", "--config", cfg_path});
  REQUIRE(tr.code == 0);
  CHECK(fs::exists(d / "run" / "final.ckpt"));
  CHECK(fs::exists(d / "run" / "log.jsonl"));
  CHECK(run({"train", "--config", cfg_path}).code == cli::kExitIo);

  const auto ev = run({"eval", "--config", cfg_path, "--split", "train"});
  REQUIRE(ev.code == 0);
  const auto report = nlohmann::json::parse(read_file(d / "run" / "eval-train.json"));
  // Two steps from a fresh init is no better than guessing among the 8 symbol meanings.
  CHECK(report["tasks"]["TagId"]["accuracy"].get<double>() <= 2.0 / 8.0);

  const auto rd = run({"render", "--config", cfg_path, "--kind", "TagId", "--out", (d / "s.ppm").string()});
  REQUIRE(rd.code == 0);
  CHECK(rd.out.find("prompt: what does the ") == 0);
  const auto inf = run({"infer", "--checkpoint", (d / "run" / "final.ckpt").string(), "--image", (d / "s.ppm").string(),
                        "--prompt", "what does the red symbol mean?"});
  CHECK(inf.code == 0);
  fs::remove_all(d);
}
