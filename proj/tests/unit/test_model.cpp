// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "geodecoder/error.hpp"
#include "geodecoder/model.hpp"
#include "geodecoder/rng.hpp"

using namespace geodecoder;
using model::GeoDecoderConfig;
using model::Params;
using nn::Tape;
using text::TokenSeq;

namespace {

GeoDecoderConfig small_config() {
  GeoDecoderConfig c = GeoDecoderConfig::desk();
  c.vocab = 40;
  c.image_size = 32;
  c.dropout = 0.0;
  return c;
}

// Every tensor drawn from N(0, s^2), so LN affines and biases take part too.
template <typename T>
Params<T> random_params(const GeoDecoderConfig& c, std::uint64_t seed, double s = 0.3) {
  auto p = Params<T>::zeros(c);
  Rng rng(seed);
  for (auto& v : p.values)
    for (auto& x : v) x = static_cast<T>(rng.normal(0.0, s));
  return p;
}

render::Raster random_raster(int size, std::uint64_t seed) {
  Rng rng(seed);
  render::Raster r(size, size);
  for (auto& b : r.pixels()) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return r;
}

TokenSeq random_tokens(Rng& rng, int n, int vocab) {
  TokenSeq t(static_cast<std::size_t>(n));
  for (auto& x : t) x = static_cast<int>(rng.uniform_int(text::kNumSpecials, vocab - 1));
  return t;
}

template <typename T>
std::vector<T> logits(const Params<T>& params, const render::Raster& r, const TokenSeq& in, const TokenSeq& out) {
  Tape<T> tape;
  const auto p = model::bind<T>(tape, params, nullptr);
  return model::forward(params, p, r, in, out).values();
}

template <typename T>
std::vector<T> trunk_values(const Params<T>& params, const model::SequenceInput& in) {
  Tape<T> tape;
  const auto p = model::bind<T>(tape, params, nullptr);
  return model::trunk(params, p, in).values();
}

double gelu_ref(double x) {
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / 3.14159265358979323846) * (x + 0.044715 * x * x * x)));
}

// Straightforward single-expert block over rows x[n][d], all positions mutually visible.
std::vector<double> reference_block(const GeoDecoderConfig& c, const Params<double>& P, const model::ExpertIndex& e,
                                    const std::vector<double>& x, int n) {
  const int d = c.hidden, H = c.heads, dh = d / H, f = c.ffn_dim;
  const auto& v = P.values;
  auto ln = [&](const std::vector<double>& in, int g, int b) {
    std::vector<double> out(in.size());
    for (int r = 0; r < n; ++r) {
      double m = 0, var = 0;
      for (int i = 0; i < d; ++i) m += in[r * d + i];
      m /= d;
      for (int i = 0; i < d; ++i) var += (in[r * d + i] - m) * (in[r * d + i] - m);
      var /= d;
      for (int i = 0; i < d; ++i) out[r * d + i] = (in[r * d + i] - m) / std::sqrt(var + 1e-5) * v[g][i] + v[b][i];
    }
    return out;
  };
  auto lin = [&](const std::vector<double>& in, int rows, int k, int w, int b, int m) {
    std::vector<double> out(static_cast<std::size_t>(rows) * m);
    for (int r = 0; r < rows; ++r)
      for (int j = 0; j < m; ++j) {
        double s = v[b][j];
        for (int i = 0; i < k; ++i) s += in[r * k + i] * v[w][i * m + j];
        out[r * m + j] = s;
      }
    return out;
  };
  const auto y = ln(x, e.ln1_gamma, e.ln1_beta);
  const auto q = lin(y, n, d, e.wq, e.bq, d), k = lin(y, n, d, e.wk, e.bk, d), vv = lin(y, n, d, e.wv, e.bv, d);
  std::vector<double> mixed(static_cast<std::size_t>(n) * d, 0.0);
  for (int h = 0; h < H; ++h)
    for (int i = 0; i < n; ++i) {
      std::vector<double> s(n);
      double mx = -1e300;
      for (int j = 0; j < n; ++j) {
        double dot = 0;
        for (int t = 0; t < dh; ++t) dot += q[i * d + h * dh + t] * k[j * d + h * dh + t];
        s[j] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, s[j]);
      }
      double z = 0;
      for (auto& sj : s) z += (sj = std::exp(sj - mx));
      for (int j = 0; j < n; ++j)
        for (int t = 0; t < dh; ++t) mixed[i * d + h * dh + t] += s[j] / z * vv[j * d + h * dh + t];
    }
  const auto o = lin(mixed, n, d, e.wo, e.bo, d);
  std::vector<double> x1(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) x1[i] = x[i] + o[i];
  auto hdn = lin(ln(x1, e.ln2_gamma, e.ln2_beta), n, d, e.w1, e.b1, f);
  for (auto& t : hdn) t = gelu_ref(t);
  const auto ff = lin(hdn, n, f, e.w2, e.b2, d);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x1[i] + ff[i];
  return out;
}

}  // namespace

TEST_CASE("parameter counts") {
  // Hand-summed term by term from the layout.
  CHECK(model::count_params(GeoDecoderConfig::full()) == 297'066'920);
  GeoDecoderConfig desk = GeoDecoderConfig::desk();
  desk.vocab = 512;
  CHECK(model::count_params(desk) == 329'920);
  CHECK(static_cast<std::int64_t>(Params<float>::zeros(desk).count()) == 329'920);
  CHECK(static_cast<std::int64_t>(Params<float>::zeros(small_config()).count()) == model::count_params(small_config()));

  GeoDecoderConfig big = desk;
  big.vocab = 1024;
  CHECK(model::count_params(big) - model::count_params(desk) == 2 * 512 * 64 + 512);

  const auto full = GeoDecoderConfig::full();
  CHECK(full.num_patches() == 196);
  CHECK(full.max_text() == 60);
  CHECK(desk.num_patches() == 36);
}

TEST_CASE("config validation and JSON") {
  GeoDecoderConfig c;
  c.heads = 5;
  try {
    c.validate();
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("heads") != std::string::npos);
  }
  c = GeoDecoderConfig::desk();
  c.image_size = 100;
  CHECK_THROWS_AS(c.validate(), ValidationError);

  nlohmann::json j = GeoDecoderConfig::full();
  CHECK(j.get<GeoDecoderConfig>() == GeoDecoderConfig::full());
  CHECK(nlohmann::json::object().get<GeoDecoderConfig>() == GeoDecoderConfig::desk());
}

TEST_CASE("layout names") {
  const auto l = model::Layout::build(GeoDecoderConfig::desk());
  CHECK(l.specs[l.find("blocks.1.text.wq")].shape == nn::Shape{64, 64});
  CHECK(l.specs[l.find("head.w")].shape == nn::Shape{64, 512});
  CHECK_FALSE(l.specs[l.find("blocks.0.image.ln1.gamma")].decay);
  CHECK_FALSE(l.specs[l.find("blocks.0.image.bq")].decay);
  CHECK(l.specs[l.find("tok_emb")].decay);
  CHECK_THROWS(l.find("nope"));
}

TEST_CASE("init") {
  const auto c = GeoDecoderConfig::desk();
  const auto a = Params<float>::init(c, 3);
  CHECK(a.values == Params<float>::init(c, 3).values);
  CHECK(a.values != Params<float>::init(c, 4).values);
  const auto& l = a.layout;
  for (float g : a.values[l.final_gamma]) CHECK(g == 1.0f);
  for (float b : a.values[l.head_b]) CHECK(b == 0.0f);
  double s = 0, s2 = 0;
  const auto& w = a.values[l.head_w];
  for (float x : w) {
    CHECK(std::abs(x) <= 0.04f + 1e-7f);
    s += x;
    s2 += static_cast<double>(x) * x;
  }
  // A normal truncated at 2 sigma keeps about 77% of its variance.
  CHECK(std::sqrt(s2 / w.size() - (s / w.size()) * (s / w.size())) == doctest::Approx(0.02 * 0.8796).epsilon(0.05));
}

TEST_CASE("attention mask") {
  const auto m = model::build_attention_mask(2, 1, 2);
  for (int q = 0; q < 3; ++q)
    for (int k = 0; k < 5; ++k) CHECK(m.at(q, k) == (k < 3));
  for (int k = 0; k < 5; ++k) CHECK(m.at(3, k) == (k <= 3));
  for (int k = 0; k < 5; ++k) CHECK(m.at(4, k));

  const auto bi = model::build_attention_mask(4, 0, 0);
  for (auto a : bi.allow) CHECK(a == 1);
  const auto causal = model::build_attention_mask(0, 0, 4);
  for (int q = 0; q < 4; ++q)
    for (int k = 0; k < 4; ++k) CHECK(causal.at(q, k) == (k <= q));
}

TEST_CASE("patch embedding") {
  const auto c = GeoDecoderConfig::desk();
  auto P = Params<double>::zeros(c);
  Rng rng(1);
  for (auto& b : P.values[P.layout.patch_b]) b = rng.normal(0, 1);
  Tape<double> tape;
  auto p = model::bind<double>(tape, P, nullptr);
  const auto zero = model::patch_embed(c, P.layout, p, render::Raster(96, 96));
  CHECK(zero.shape() == nn::Shape{36, 64});
  const auto zv = zero.values();
  for (int t = 0; t < 36; ++t)
    for (int i = 0; i < 64; ++i) CHECK(zv[t * 64 + i] == P.values[P.layout.patch_b][i]);

  // Pixel (x=17, y=2), green channel: patch 1, feature (2 * 16 + 1) * 3 + 1.
  auto Q = Params<double>::zeros(c);
  Q.values[Q.layout.patch_w][100 * 64 + 5] = 1.0;
  render::Raster r(96, 96);
  r.set(17, 2, {0, 51, 0});
  Tape<double> t2;
  const auto e = model::patch_embed(c, Q.layout, model::bind<double>(t2, Q, nullptr), r).values();
  for (int t = 0; t < 36; ++t)
    for (int i = 0; i < 64; ++i) CHECK(e[t * 64 + i] == ((t == 1 && i == 5) ? 0.2 : 0.0));

  CHECK_THROWS_AS(model::patch_embed(c, P.layout, p, render::Raster(64, 64)), std::invalid_argument);
  auto c224 = GeoDecoderConfig::full();
  CHECK(c224.num_patches() == 196);
}

TEST_CASE("block with zero weights is the identity") {
  const auto c = small_config();
  auto P = Params<double>::zeros(c);
  for (const auto& blk : P.layout.blocks)
    for (const auto& e : blk) {
      for (auto& g : P.values[e.ln1_gamma]) g = 1.0;
      for (auto& g : P.values[e.ln2_gamma]) g = 1.0;
    }
  Tape<double> tape;
  const auto p = model::bind<double>(tape, P, nullptr);
  Rng rng(2);
  std::vector<double> xv(7 * 64);
  for (auto& v : xv) v = rng.normal(0, 1);
  const auto x = tape.constant({7, 64}, xv);
  const auto y = model::block_forward(c, P.layout.blocks[0], p, x, 3, model::build_attention_mask(3, 2, 2), {}, 0);
  CHECK(y.values() == xv);
}

TEST_CASE("image expert block matches a reference implementation") {
  const auto c = small_config();
  const auto P = random_params<double>(c, 5, 0.2);
  Rng rng(3);
  const int n = 5;
  std::vector<double> xv(n * 64);
  for (auto& v : xv) v = rng.normal(0, 1);
  Tape<double> tape;
  const auto p = model::bind<double>(tape, P, nullptr);
  const auto y = model::block_forward(c, P.layout.blocks[1], p, tape.constant({n, 64}, xv), n,
                                      model::build_attention_mask(n, 0, 0), {}, 0)
                     .values();
  const auto ref = reference_block(c, P, P.layout.blocks[1][0], xv, n);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(y[i] - ref[i]) <= 1e-5 * std::max(1.0, std::abs(ref[i])));
}

TEST_CASE("single position attends only to itself") {
  auto c = small_config();
  c.layers = 1;
  const auto P = random_params<double>(c, 6);
  Tape<double> tape;
  const auto p = model::bind<double>(tape, P, nullptr);
  Rng rng(4);
  std::vector<double> xv(64);
  for (auto& v : xv) v = rng.normal(0, 1);
  const auto mask = model::build_attention_mask(0, 0, 1);
  const auto y = model::block_forward(c, P.layout.blocks[0], p, tape.constant({1, 64}, xv), 0, mask, {}, 0).values();
  // With one key the attention output is exactly the value projection.
  const auto ref = reference_block(c, P, P.layout.blocks[0][1], xv, 1);
  for (int i = 0; i < 64; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-9));
}

TEST_CASE("forward shapes and budgets") {
  const auto c = small_config();
  const auto P = random_params<float>(c, 7, 0.05);
  const auto r = random_raster(32, 1);
  Rng rng(5);
  const auto in = random_tokens(rng, 6, c.vocab), out = random_tokens(rng, 4, c.vocab);
  CHECK(logits(P, r, in, out).size() == 4u * 40u);
  CHECK_THROWS_AS(logits(P, r, random_tokens(rng, c.max_text_in, c.vocab), out), std::invalid_argument);
  CHECK_THROWS_AS(logits(P, r, in, random_tokens(rng, c.max_text_out + 1, c.vocab)), std::invalid_argument);
}

TEST_CASE("output perturbation never reaches earlier logits") {
  const auto c = small_config();
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto P = random_params<float>(c, 100 + trial);
    const auto r = random_raster(32, trial);
    Rng rng(trial);
    const auto in = random_tokens(rng, 5, c.vocab);
    auto out = random_tokens(rng, 6, c.vocab);
    const auto base = logits(P, r, in, out);
    const int j = static_cast<int>(rng.index(out.size()));
    out[j] = text::kNumSpecials + (out[j] + 1 - text::kNumSpecials) % (c.vocab - text::kNumSpecials);
    const auto moved = logits(P, r, in, out);
    for (int t = 0; t <= j; ++t)
      for (int v = 0; v < c.vocab; ++v) CHECK(base[t * c.vocab + v] == moved[t * c.vocab + v]);
    bool later = j + 1 == static_cast<int>(out.size());
    for (std::size_t i = static_cast<std::size_t>(j + 1) * c.vocab; i < base.size(); ++i) later = later || base[i] != moved[i];
    CHECK(later);
  }
}

TEST_CASE("input text reaches the first output and the image tokens") {
  const auto c = small_config();
  const auto P = random_params<double>(c, 9);
  const auto r = random_raster(32, 2);
  Rng rng(6);
  auto in = random_tokens(rng, 5, c.vocab);
  const auto out = random_tokens(rng, 3, c.vocab);
  const auto a = logits(P, r, in, out);
  const auto ta = trunk_values(P, {&r, &in, &out});
  in[2] = in[2] == 5 ? 6 : 5;
  const auto b = logits(P, r, in, out);
  const auto tb = trunk_values(P, {&r, &in, &out});
  double diff = 0;
  for (int v = 0; v < c.vocab; ++v) diff = std::max(diff, std::abs(a[v] - b[v]));
  CHECK(diff > 1e-6);
  double img = 0;
  for (int i = 0; i < c.num_patches() * c.hidden; ++i) img = std::max(img, std::abs(ta[i] - tb[i]));
  CHECK(img > 1e-6);
}

TEST_CASE("zeroing one expert leaves the other modality alone") {
  const auto c = small_config();
  const auto P = random_params<float>(c, 11);
  const auto r = random_raster(32, 3);
  Rng rng(7);
  const auto in = random_tokens(rng, 5, c.vocab);

  auto no_text = P;
  no_text.zero_expert(model::Modality::text);
  CHECK(trunk_values(P, {&r, nullptr, nullptr}) == trunk_values(no_text, {&r, nullptr, nullptr}));
  CHECK(trunk_values(P, {nullptr, &in, nullptr}) != trunk_values(no_text, {nullptr, &in, nullptr}));

  auto no_image = P;
  no_image.zero_expert(model::Modality::image);
  CHECK(trunk_values(P, {nullptr, &in, nullptr}) == trunk_values(no_image, {nullptr, &in, nullptr}));
  CHECK(trunk_values(P, {&r, nullptr, nullptr}) != trunk_values(no_image, {&r, nullptr, nullptr}));
}

TEST_CASE("f32 and f64 forward agree") {
  const auto c = small_config();
  const auto P = random_params<double>(c, 12, 0.1);
  const auto r = random_raster(32, 4);
  Rng rng(8);
  const auto in = random_tokens(rng, 4, c.vocab), out = random_tokens(rng, 3, c.vocab);
  const auto a = logits(P, r, in, out);
  const auto b = logits(P.cast<float>(), r, in, out);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-3);
}

TEST_CASE("dropout keys the forward pass") {
  const auto c = small_config();
  const auto P = random_params<float>(c, 13, 0.1);
  const auto r = random_raster(32, 5);
  Rng rng(9);
  const auto in = random_tokens(rng, 4, c.vocab), out = random_tokens(rng, 3, c.vocab);
  auto run = [&](double rate, std::uint64_t key) {
    Tape<float> tape;
    const auto p = model::bind<float>(tape, P, nullptr);
    return model::forward(P, p, r, in, out, {rate, key}).values();
  };
  CHECK(run(0.1, 1) == run(0.1, 1));
  CHECK(run(0.1, 1) != run(0.1, 2));
  CHECK(run(0.0, 1) == run(0.0, 2));
}

TEST_CASE("generation") {
  const auto c = small_config();
  const auto r = random_raster(32, 6);
  Rng rng(10);
  const auto prompt = random_tokens(rng, 4, c.vocab);

  auto eos = Params<float>::zeros(c);
  eos.values[eos.layout.head_b][text::kEos] = 100.0f;
  CHECK(model::generate(eos, r, prompt).empty());

  // All-equal logits: ties go to the lowest id, which is <pad>.
  const auto tie = Params<float>::zeros(c);
  const auto tied = model::generate(tie, r, prompt, {1.0, 3});
  CHECK(tied == TokenSeq{0, 0, 0});

  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto P = random_params<float>(c, 200 + s, 0.2);
    const auto g = model::generate(P, r, prompt, {1.0, 6});
    CHECK(g.size() <= 6);
    CHECK(model::generate(P, r, prompt, {0.3, 6}) == g);
    CHECK(model::generate(P, r, prompt, {1.0, 6}) == g);

    // Teacher forcing the generated text reproduces it as the row-wise argmax.
    TokenSeq teacher = g;
    if (g.size() < 6) teacher.push_back(text::kEos);
    const auto lg = logits(P, r, prompt, teacher);
    for (std::size_t t = 0; t < teacher.size(); ++t) {
      int best = 0;
      for (int v = 1; v < c.vocab; ++v)
        if (lg[t * c.vocab + v] > lg[t * c.vocab + best]) best = v;
      CHECK(best == teacher[t]);
    }
  }
}
