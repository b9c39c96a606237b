// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "geodecoder/checkpoint.hpp"
#include "geodecoder/error.hpp"
#include "geodecoder/rng.hpp"
#include "geodecoder/trainer.hpp"

using namespace geodecoder;
using model::GeoDecoderConfig;
using model::Params;
using train::TrainHyper;

namespace {

GeoDecoderConfig tiny() {
  GeoDecoderConfig c = GeoDecoderConfig::desk();
  c.vocab = 24;
  c.image_size = 32;
  return c;
}

std::vector<train::Example> toy_data(int n, const GeoDecoderConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<train::Example> data(static_cast<std::size_t>(n));
  for (auto& e : data) {
    e.raster = render::Raster(c.image_size, c.image_size);
    for (auto& b : e.raster.pixels()) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    for (int i = 0; i < 4; ++i) e.input.push_back(static_cast<int>(rng.uniform_int(4, c.vocab - 1)));
    for (int i = 0; i < 3; ++i) e.target.push_back(static_cast<int>(rng.uniform_int(4, c.vocab - 1)));
    e.target.push_back(text::kEos);
  }
  return data;
}

}  // namespace

TEST_CASE("loss values") {
  nn::Tape<double> tape;
  const auto uniform = tape.constant({3, 512}, std::vector<double>(3 * 512, 0.25));
  CHECK(train::loss(uniform, {7, 8, text::kEos}).item() == doctest::Approx(6.238).epsilon(1e-4));
  // Two classes with logits [ln 3, 0]; id 0 is <pad>, so the correct class sits at id 1.
  const auto two = tape.constant({1, 2}, {0.0, std::log(3.0)});
  CHECK(train::loss(two, {1}).item() == doctest::Approx(0.2877).epsilon(1e-4));
  const auto sharp = tape.constant({1, 4}, {0, 0, 50, 0});
  CHECK(train::loss(sharp, {2}).item() < 1e-20);
  CHECK_THROWS_AS(train::loss(two, {2}), std::out_of_range);
}

TEST_CASE("fresh model loss is near ln V") {
  auto c = GeoDecoderConfig::desk();
  c.vocab = 512;
  c.image_size = 32;
  const auto P = Params<float>::init(c, 1);
  const auto data = toy_data(4, c, 2);
  train::Grads g;
  const double l = train::batch_loss_and_grad(P, {&data[0], &data[1], &data[2], &data[3]}, 0.0, 0, g, 1);
  CHECK(std::abs(l - std::log(512.0)) < 0.2);
}

TEST_CASE("learning-rate schedule") {
  TrainHyper h;
  h.warmup = 100;
  h.peak_lr = 1e-4;
  CHECK(train::lr_at(100, h, 1000) == doctest::Approx(1e-4));
  CHECK(train::lr_at(50, h, 1000) == doctest::Approx(5e-5));
  CHECK(train::lr_at(1000, h, 1000) == 0.0);
  CHECK(train::lr_at(550, h, 1000) == doctest::Approx(5e-5));
  double prev = 0;
  for (int s = 1; s <= 1000; ++s) {
    const double lr = train::lr_at(s, h, 1000);
    CHECK(lr <= 1e-4 + 1e-18);
    CHECK(std::abs(lr - prev) <= 1e-4 / 100 + 1e-15);
    prev = lr;
  }
  CHECK_THROWS(train::lr_at(0, h, 1000));
}

TEST_CASE("AdamW") {
  auto c = tiny();
  auto P = Params<float>::init(c, 3);
  const auto before = P.values;
  TrainHyper h;
  h.weight_decay = 0.0;
  auto st = train::OptimizerState::zeros(P);
  train::Grads zero(P.values.size());
  for (std::size_t i = 0; i < zero.size(); ++i) zero[i].assign(P.values[i].size(), 0.0f);
  train::adamw_step(P, zero, st, h, 1e-3);
  CHECK(P.values == before);
  CHECK(st.step == 1);

  h.weight_decay = 0.01;
  train::adamw_step(P, zero, st, h, 1e-3);
  const int w = P.layout.head_w, b = P.layout.final_gamma;
  for (std::size_t k = 0; k < 20; ++k)
    CHECK(P.values[w][k] == static_cast<float>(before[w][k] * (1.0 - 1e-3 * 0.01)));
  CHECK(P.values[b] == before[b]);

  // Scalar with constant gradient 1: first step moves by lr / (1 + eps).
  auto Q = Params<float>::zeros(c);
  auto sq = train::OptimizerState::zeros(Q);
  train::Grads one = zero;
  one[Q.layout.head_b][0] = 1.0f;
  h.weight_decay = 0.0;
  train::adamw_step(Q, one, sq, h, 1e-2);
  CHECK(Q.values[Q.layout.head_b][0] == doctest::Approx(-1e-2 / (1 + 1e-8)).epsilon(1e-6));

  // Three parameters, two steps, checked against the update rule by hand.
  auto R = Params<float>::zeros(c);
  auto sr = train::OptimizerState::zeros(R);
  const std::array<float, 3> g1 = {0.5f, -2.0f, 0.0f}, g2 = {0.25f, 1.0f, 3.0f};
  TrainHyper hh;
  hh.weight_decay = 0.0;
  hh.beta1 = 0.5;
  hh.beta2 = 0.5;
  for (auto gs : {g1, g2}) {
    train::Grads g = zero;
    for (int i = 0; i < 3; ++i) g[R.layout.head_b][i] = gs[i];
    train::adamw_step(R, g, sr, hh, 0.1);
  }
  for (int i = 0; i < 3; ++i) {
    double m = 0, v = 0, th = 0;
    int t = 0;
    for (auto gs : {g1, g2}) {
      ++t;
      m = 0.5 * m + 0.5 * gs[i];
      v = 0.5 * v + 0.5 * gs[i] * gs[i];
      th -= 0.1 * (m / (1 - std::pow(0.5, t))) / (std::sqrt(v / (1 - std::pow(0.5, t))) + 1e-8);
    }
    CHECK(R.values[R.layout.head_b][i] == doctest::Approx(th).epsilon(1e-6));
  }

  train::Grads bad = zero;
  bad[P.layout.tok_emb][3] = std::nanf("");
  const auto snapshot = P.values;
  try {
    train::adamw_step(P, bad, st, h, 1e-3);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("tok_emb") != std::string::npos);
  }
  CHECK(P.values == snapshot);
}

TEST_CASE("hyperparameter validation and JSON") {
  TrainHyper h;
  h.batch_size = -2;
  try {
    h.validate();
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("batch_size") != std::string::npos);
  }
  TrainHyper g;
  g.peak_lr = 3e-4;
  g.steps = 7;
  nlohmann::json j = g;
  CHECK(j.get<TrainHyper>() == g);
}

TEST_CASE("training with lr 0 leaves parameters alone") {
  const auto c = tiny();
  auto P = Params<float>::init(c, 4);
  const auto before = P.values;
  TrainHyper h;
  h.batch_size = 2;
  h.steps = 2;
  h.peak_lr = 0.0;
  h.weight_decay = 0.01;
  train::OptimizerState st;
  train::train(P, st, toy_data(2, c, 5), h);
  CHECK(P.values == before);
  CHECK(st.step == 2);
}

TEST_CASE("training is deterministic and learns") {
  const auto c = tiny();
  const auto data = toy_data(6, c, 6);
  TrainHyper h;
  h.batch_size = 3;
  h.epochs = 20;
  h.warmup = 5;
  h.peak_lr = 3e-3;
  h.seed = 11;
  h.log_every = 5;
  auto run = [&](int threads, std::vector<double>* losses, int* epochs) {
    auto P = Params<float>::init(c, 7);
    train::OptimizerState st;
    train::TrainCallbacks cb;
    cb.on_log = [&](const train::LogRecord& r) {
      if (losses) losses->push_back(r.loss);
    };
    cb.on_epoch = [&](int e, const Params<float>&, const train::OptimizerState&) {
      if (epochs) *epochs = e;
    };
    train::train(P, st, data, h, cb, threads);
    return train::serialize_checkpoint({P, st, text::Vocabulary::build({"abcdefghijklmnopqrst"}), st.step});
  };
  std::vector<double> losses;
  int epochs = 0;
  const auto a = run(1, &losses, &epochs);
  CHECK(a == run(3, nullptr, nullptr));
  CHECK(epochs == 20);
  CHECK(train::total_steps(h, data.size()) == 40);
  CHECK(losses.size() == 8);
  CHECK(losses.back() < losses.front() * 0.5);
}

TEST_CASE("model gradient check on a tiny config") {
  auto c = tiny();
  c.layers = 1;
  c.hidden = 16;
  c.heads = 2;
  c.ffn_dim = 32;
  const auto r = train::check_model_gradients(c, 3);
  CHECK(r.max_rel_error <= 1e-4);
  CHECK(r.checked >= 20);
}

TEST_CASE("checkpoint round trip") {
  const auto c = tiny();
  auto P = Params<float>::init(c, 8);
  auto st = train::OptimizerState::zeros(P);
  Rng rng(9);
  for (auto& m : st.m)
    for (auto& x : m) x = static_cast<float>(rng.normal(0, 1));
  st.step = 17;
  const auto vocab = text::Vocabulary::build({"hello world, x=1"});
  const train::Checkpoint ck{P, st, vocab, 17};
  const std::string bytes = train::serialize_checkpoint(ck);
  const auto back = train::parse_checkpoint(bytes);
  CHECK(back.params.config == P.config);
  CHECK(back.params.values == P.values);
  REQUIRE(back.optimizer.has_value());
  CHECK(*back.optimizer == st);
  CHECK(back.vocab == vocab);
  CHECK(back.step == 17);
  CHECK(train::serialize_checkpoint(back) == bytes);

  const auto no_opt = train::parse_checkpoint(train::serialize_checkpoint({P, std::nullopt, vocab, 0}));
  CHECK_FALSE(no_opt.optimizer.has_value());

  const auto path = std::filesystem::temp_directory_path() / "geodecoder_ckpt_test.ckpt";
  train::save_checkpoint(ck, path);
  CHECK(train::load_checkpoint(path).params.values == P.values);
  std::filesystem::remove(path);

  try {
    train::parse_checkpoint(std::string_view(bytes).substr(0, bytes.size() - 5));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() > 0);
    CHECK(e.offset() <= bytes.size());
  }
  CHECK_THROWS_AS(train::parse_checkpoint("GDCKPT 2 2\n{}"), ParseError);
}

TEST_CASE("checkpoint header lists every parameter once") {
  auto c = GeoDecoderConfig::desk();
  c.vocab = 512;
  const auto bytes = train::serialize_checkpoint({Params<float>::zeros(c), std::nullopt, text::Vocabulary::build({"a"}), 0});
  const auto nl = bytes.find('\n');
  const auto len = std::stoul(bytes.substr(9, nl - 9));
  const auto header = nlohmann::json::parse(bytes.substr(nl + 1, len));
  std::int64_t total = 0;
  for (const auto& t : header.at("tensors"))
    if (t.at("group") == "param") total += t.at("count").get<std::int64_t>();
  CHECK(total == model::count_params(c));
  CHECK(total == 329'920);
}
