// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geodecoder/error.hpp"
#include "geodecoder/rng.hpp"

namespace geodecoder::model {

GeoDecoderConfig GeoDecoderConfig::full() {
  GeoDecoderConfig c;
  c.layers = 12;
  c.hidden = 768;
  c.heads = 16;
  c.ffn_dim = 3072;
  c.vocab = 82088;
  c.image_size = 224;
  c.patch_size = 16;
  c.max_text_in = 30;
  c.max_text_out = 30;
  c.dropout = 0.1;
  c.temperature = 1.0;
  return c;
}

GeoDecoderConfig GeoDecoderConfig::desk() { return GeoDecoderConfig{}; }

void GeoDecoderConfig::validate() const {
  auto positive = [](const char* field, int v) {
    if (v <= 0) throw ValidationError(field, "must be positive, got " + std::to_string(v));
  };
  positive("layers", layers);
  positive("hidden", hidden);
  positive("heads", heads);
  positive("ffn_dim", ffn_dim);
  positive("image_size", image_size);
  positive("patch_size", patch_size);
  positive("max_text_in", max_text_in);
  positive("max_text_out", max_text_out);
  if (hidden % heads != 0) throw ValidationError("heads", "hidden size " + std::to_string(hidden) + " is not divisible by " + std::to_string(heads));
  if (image_size % patch_size != 0)
    throw ValidationError("patch_size", "image size " + std::to_string(image_size) + " is not divisible by " + std::to_string(patch_size));
  if (vocab <= text::kNumSpecials) throw ValidationError("vocab", "must exceed the " + std::to_string(text::kNumSpecials) + " special tokens");
  if (max_text_in < 2) throw ValidationError("max_text_in", "needs room for <bos> and at least one input token");
  if (!(dropout >= 0 && dropout < 1)) throw ValidationError("dropout", "must lie in [0, 1)");
  if (!(temperature > 0)) throw ValidationError("temperature", "must be positive");
}

void to_json(nlohmann::json& j, const GeoDecoderConfig& c) {
  j = nlohmann::json{{"layers", c.layers},           {"hidden", c.hidden},         {"heads", c.heads},
                     {"ffn_dim", c.ffn_dim},         {"vocab", c.vocab},           {"image_size", c.image_size},
                     {"patch_size", c.patch_size},   {"max_text_in", c.max_text_in}, {"max_text_out", c.max_text_out},
                     {"dropout", c.dropout},         {"temperature", c.temperature}};
}

void from_json(const nlohmann::json& j, GeoDecoderConfig& c) {
  if (!j.is_object()) throw ValidationError("model", "expected an object");
  auto get = [&j](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(key, e.what());
    }
  };
  get("layers", c.layers);
  get("hidden", c.hidden);
  get("heads", c.heads);
  get("ffn_dim", c.ffn_dim);
  get("vocab", c.vocab);
  get("image_size", c.image_size);
  get("patch_size", c.patch_size);
  get("max_text_in", c.max_text_in);
  get("max_text_out", c.max_text_out);
  get("dropout", c.dropout);
  get("temperature", c.temperature);
}

std::int64_t count_params(const GeoDecoderConfig& c) {
  const std::int64_t d = c.hidden;
  const std::int64_t v = c.vocab;
  const std::int64_t f = c.ffn_dim;
  const std::int64_t p2 = static_cast<std::int64_t>(c.patch_size) * c.patch_size;
  const std::int64_t per_expert = 4 * (d * d + d) + 4 * d + (d * f + f + f * d + d);
  return v * d + (3 * p2 * d + d) + (static_cast<std::int64_t>(c.num_patches()) + c.max_text()) * d +
         static_cast<std::int64_t>(c.layers) * 2 * per_expert + 2 * d + (d * v + v);
}

// ---- layout ----------------------------------------------------------------------

Layout Layout::build(const GeoDecoderConfig& c) {
  c.validate();
  Layout l;
  using Init = ParamSpec::Init;
  auto add = [&l](std::string name, Shape shape, Init init, bool decay) {
    l.specs.push_back({std::move(name), std::move(shape), init, decay});
    return static_cast<int>(l.specs.size()) - 1;
  };
  const int d = c.hidden;
  l.tok_emb = add("tok_emb", {c.vocab, d}, Init::normal, true);
  l.patch_w = add("patch.w", {c.patch_dim(), d}, Init::normal, true);
  l.patch_b = add("patch.b", {d}, Init::zeros, false);
  l.img_pos = add("img_pos", {c.num_patches(), d}, Init::normal, true);
  l.txt_pos = add("txt_pos", {c.max_text(), d}, Init::normal, true);
  for (int i = 0; i < c.layers; ++i) {
    std::array<ExpertIndex, 2> block{};
    for (int m = 0; m < 2; ++m) {
      const std::string pre = "blocks." + std::to_string(i) + (m == 0 ? ".image." : ".text.");
      ExpertIndex& e = block[static_cast<std::size_t>(m)];
      e.ln1_gamma = add(pre + "ln1.gamma", {d}, Init::ones, false);
      e.ln1_beta = add(pre + "ln1.beta", {d}, Init::zeros, false);
      e.wq = add(pre + "wq", {d, d}, Init::normal, true);
      e.bq = add(pre + "bq", {d}, Init::zeros, false);
      e.wk = add(pre + "wk", {d, d}, Init::normal, true);
      e.bk = add(pre + "bk", {d}, Init::zeros, false);
      e.wv = add(pre + "wv", {d, d}, Init::normal, true);
      e.bv = add(pre + "bv", {d}, Init::zeros, false);
      e.wo = add(pre + "wo", {d, d}, Init::normal, true);
      e.bo = add(pre + "bo", {d}, Init::zeros, false);
      e.ln2_gamma = add(pre + "ln2.gamma", {d}, Init::ones, false);
      e.ln2_beta = add(pre + "ln2.beta", {d}, Init::zeros, false);
      e.w1 = add(pre + "ffn.w1", {d, c.ffn_dim}, Init::normal, true);
      e.b1 = add(pre + "ffn.b1", {c.ffn_dim}, Init::zeros, false);
      e.w2 = add(pre + "ffn.w2", {c.ffn_dim, d}, Init::normal, true);
      e.b2 = add(pre + "ffn.b2", {d}, Init::zeros, false);
    }
    l.blocks.push_back(block);
  }
  l.final_gamma = add("final_ln.gamma", {d}, Init::ones, false);
  l.final_beta = add("final_ln.beta", {d}, Init::zeros, false);
  l.head_w = add("head.w", {d, c.vocab}, Init::normal, true);
  l.head_b = add("head.b", {c.vocab}, Init::zeros, false);
  return l;
}

int Layout::find(const std::string& name) const {
  for (std::size_t i = 0; i < specs.size(); ++i)
    if (specs[i].name == name) return static_cast<int>(i);
  throw std::out_of_range("no parameter named '" + name + "'");
}

// ---- parameters ------------------------------------------------------------------

template <typename T>
Params<T> Params<T>::zeros(const GeoDecoderConfig& c) {
  Params p;
  p.config = c;
  p.layout = Layout::build(c);
  for (const auto& s : p.layout.specs) p.values.emplace_back(nn::numel(s.shape), T(0));
  return p;
}

template <typename T>
Params<T> Params<T>::init(const GeoDecoderConfig& c, std::uint64_t seed) {
  Params p = zeros(c);
  for (std::size_t i = 0; i < p.layout.specs.size(); ++i) {
    const ParamSpec& s = p.layout.specs[i];
    auto& v = p.values[i];
    switch (s.init) {
      case ParamSpec::Init::zeros:
        break;
      case ParamSpec::Init::ones:
        std::fill(v.begin(), v.end(), T(1));
        break;
      case ParamSpec::Init::normal: {
        Rng rng(hash_combine(seed, fnv1a(s.name)));
        for (auto& x : v) {
          double z;
          do z = rng.normal();
          while (std::abs(z) > 2.0);
          x = static_cast<T>(0.02 * z);
        }
        break;
      }
    }
  }
  return p;
}

template <typename T>
std::size_t Params<T>::count() const {
  std::size_t n = 0;
  for (const auto& v : values) n += v.size();
  return n;
}

template <typename T>
void Params<T>::zero_expert(Modality m) {
  for (const auto& block : layout.blocks) {
    const ExpertIndex& e = block[static_cast<std::size_t>(m)];
    for (int id : {e.ln1_gamma, e.ln1_beta, e.wq, e.bq, e.wk, e.bk, e.wv, e.bv, e.wo, e.bo, e.ln2_gamma, e.ln2_beta,
                   e.w1, e.b1, e.w2, e.b2})
      std::fill(values[static_cast<std::size_t>(id)].begin(), values[static_cast<std::size_t>(id)].end(), T(0));
  }
}

template <typename T>
template <typename U>
Params<U> Params<T>::cast() const {
  Params<U> out;
  out.config = config;
  out.layout = layout;
  for (const auto& v : values) out.values.emplace_back(v.begin(), v.end());
  return out;
}

template <typename T>
std::vector<Tensor<T>> bind(Tape<T>& tape, const Params<T>& params, std::vector<std::vector<T>>* grads) {
  if (grads) {
    if (grads->size() != params.values.size()) {
      grads->clear();
      for (const auto& v : params.values) grads->emplace_back(v.size(), T(0));
    }
  }
  std::vector<Tensor<T>> out;
  out.reserve(params.values.size());
  for (std::size_t i = 0; i < params.values.size(); ++i)
    out.push_back(tape.external(params.layout.specs[i].shape, params.values[i].data(), grads ? (*grads)[i].data() : nullptr));
  return out;
}

// ---- forward ---------------------------------------------------------------------

nn::Mask build_attention_mask(int n_img, int n_in, int n_out) {
  if (n_img < 0 || n_in < 0 || n_out < 0) throw std::invalid_argument("build_attention_mask: negative length");
  const int t = n_img + n_in + n_out;
  const int prefix = n_img + n_in;
  nn::Mask m{{t, t}, std::vector<std::uint8_t>(static_cast<std::size_t>(t) * t, 0)};
  for (int q = 0; q < t; ++q)
    for (int k = 0; k < t; ++k)
      m.allow[static_cast<std::size_t>(q) * t + k] = ((q < prefix && k < prefix) || (q >= prefix && k <= q)) ? 1 : 0;
  return m;
}

template <typename T>
Tensor<T> patch_embed(const GeoDecoderConfig& c, const Layout& l, const std::vector<Tensor<T>>& p,
                      const render::Raster& raster) {
  if (raster.width() != c.image_size || raster.height() != c.image_size)
    throw std::invalid_argument("patch_embed: raster is " + std::to_string(raster.width()) + "x" +
                                std::to_string(raster.height()) + ", model expects " + std::to_string(c.image_size) +
                                "x" + std::to_string(c.image_size));
  const int ps = c.patch_size;
  const int side = c.patches_per_side();
  const int n = c.num_patches();
  const int pd = c.patch_dim();
  std::vector<T> patches(static_cast<std::size_t>(n) * pd);
  const auto& px = raster.pixels();
  for (int py = 0; py < side; ++py)
    for (int pxi = 0; pxi < side; ++pxi) {
      T* row = patches.data() + static_cast<std::size_t>(py * side + pxi) * pd;
      for (int y = 0; y < ps; ++y)
        for (int x = 0; x < ps; ++x) {
          const std::size_t src = (static_cast<std::size_t>(py * ps + y) * c.image_size + pxi * ps + x) * 3;
          for (int ch = 0; ch < 3; ++ch) row[(y * ps + x) * 3 + ch] = static_cast<T>(px[src + ch]) / T(255);
        }
    }
  Tape<T>& tape = *p[0].tape;
  Tensor<T> x = tape.constant({n, pd}, std::move(patches));
  return nn::add(nn::linear(x, p[static_cast<std::size_t>(l.patch_w)], p[static_cast<std::size_t>(l.patch_b)]),
                 p[static_cast<std::size_t>(l.img_pos)]);
}

namespace {

template <typename T>
const Tensor<T>& at(const std::vector<Tensor<T>>& p, int i) {
  return p[static_cast<std::size_t>(i)];
}

// Applies fn(rows, expert) to the image rows and the text rows separately and
// stacks the results back in sequence order.
template <typename T, typename Fn>
Tensor<T> route(const Tensor<T>& x, int n_img, const std::array<ExpertIndex, 2>& block, Fn fn) {
  const int t = x.dim(0);
  if (n_img == t) return fn(x, block[0]);
  if (n_img == 0) return fn(x, block[1]);
  return nn::concat_rows<T>({fn(nn::slice_rows(x, 0, n_img), block[0]), fn(nn::slice_rows(x, n_img, t), block[1])});
}

}  // namespace

template <typename T>
Tensor<T> block_forward(const GeoDecoderConfig& c, const std::array<ExpertIndex, 2>& block,
                        const std::vector<Tensor<T>>& p, const Tensor<T>& x, int n_img, const nn::Mask& mask,
                        const ForwardOptions& opts, std::uint64_t layer_key) {
  if (x.rank() != 2 || x.dim(1) != c.hidden || n_img < 0 || n_img > x.dim(0))
    throw std::invalid_argument("block_forward: input " + nn::shape_str(x.shape()) + " with " + std::to_string(n_img) +
                                " image rows");
  if (mask.shape != Shape{x.dim(0), x.dim(0)})
    throw std::invalid_argument("block_forward: mask " + nn::shape_str(mask.shape) + " for " + std::to_string(x.dim(0)) + " positions");

  auto drop = [&](const Tensor<T>& v, std::uint64_t k) {
    return opts.dropout > 0 ? nn::dropout(v, opts.dropout, hash_combine(layer_key, k)) : v;
  };

  // Attention sub-layer.
  const Tensor<T> y = route(x, n_img, block, [&](const Tensor<T>& r, const ExpertIndex& e) {
    return nn::layer_norm(r, at(p, e.ln1_gamma), at(p, e.ln1_beta));
  });
  auto project = [&](int ExpertIndex::*w, int ExpertIndex::*b) {
    return route(y, n_img, block, [&](const Tensor<T>& r, const ExpertIndex& e) {
      return nn::linear(r, at(p, e.*w), at(p, e.*b));
    });
  };
  const Tensor<T> q = nn::split_heads(project(&ExpertIndex::wq, &ExpertIndex::bq), c.heads);
  const Tensor<T> k = nn::split_heads(project(&ExpertIndex::wk, &ExpertIndex::bk), c.heads);
  const Tensor<T> v = nn::split_heads(project(&ExpertIndex::wv, &ExpertIndex::bv), c.heads);
  const Tensor<T> scores = nn::matmul(q, nn::transpose(k));
  const Tensor<T> attn = drop(nn::softmax_masked(scores, mask, std::sqrt(static_cast<double>(c.head_dim()))), 1);
  const Tensor<T> mixed = nn::merge_heads(nn::matmul(attn, v));
  const Tensor<T> o = route(mixed, n_img, block, [&](const Tensor<T>& r, const ExpertIndex& e) {
    return nn::linear(r, at(p, e.wo), at(p, e.bo));
  });
  const Tensor<T> x1 = nn::add(x, drop(o, 2));

  // Feed-forward sub-layer, residual from x1.
  const Tensor<T> f = route(x1, n_img, block, [&](const Tensor<T>& r, const ExpertIndex& e) {
    const Tensor<T> h = nn::layer_norm(r, at(p, e.ln2_gamma), at(p, e.ln2_beta));
    return nn::linear(nn::gelu(nn::linear(h, at(p, e.w1), at(p, e.b1))), at(p, e.w2), at(p, e.b2));
  });
  return nn::add(x1, drop(f, 3));
}

template <typename T>
Tensor<T> trunk(const Params<T>& params, const std::vector<Tensor<T>>& p, const SequenceInput& in,
                const ForwardOptions& opts) {
  const GeoDecoderConfig& c = params.config;
  const Layout& l = params.layout;
  if (p.size() != l.specs.size()) throw std::invalid_argument("trunk: parameter binding does not match the layout");
  if (!in.input && in.output) throw std::invalid_argument("trunk: output tokens need an input segment");
  std::vector<Tensor<T>> parts;
  int n_img = 0;
  if (in.image) {
    parts.push_back(patch_embed(c, l, p, *in.image));
    n_img = c.num_patches();
  }

  int n_in = 0;
  int n_out = 0;
  if (in.input) {
    const TokenSeq& input = *in.input;
    n_in = static_cast<int>(input.size()) + 1;
    if (n_in > c.max_text_in)
      throw std::invalid_argument("input text of " + std::to_string(input.size()) + " tokens exceeds max_text_in " +
                                  std::to_string(c.max_text_in) + " (one slot holds <bos>)");
    TokenSeq ids;
    ids.reserve(static_cast<std::size_t>(c.max_text()));
    ids.push_back(text::kBos);
    ids.insert(ids.end(), input.begin(), input.end());
    if (in.output && !in.output->empty()) {
      const TokenSeq& output = *in.output;
      n_out = static_cast<int>(output.size());
      if (n_out > c.max_text_out)
        throw std::invalid_argument("output text of " + std::to_string(n_out) + " tokens exceeds max_text_out " +
                                    std::to_string(c.max_text_out));
      ids.push_back(text::kSep);
      ids.insert(ids.end(), output.begin(), output.end() - 1);
    }
    const int n_text = n_in + n_out;
    Tensor<T> pos = nn::slice_rows(at(p, l.txt_pos), 0, n_text);
    parts.push_back(nn::add(nn::embedding(at(p, l.tok_emb), ids), pos));
  }
  if (parts.empty()) throw std::invalid_argument("trunk: empty sequence");

  Tensor<T> x = parts.size() == 1 ? parts[0] : nn::concat_rows(parts);
  const nn::Mask mask = build_attention_mask(n_img, n_in, n_out);
  for (std::size_t i = 0; i < l.blocks.size(); ++i)
    x = block_forward(c, l.blocks[i], p, x, n_img, mask, opts, hash_combine(opts.dropout_key, i));
  return x;
}

template <typename T>
Tensor<T> forward(const Params<T>& params, const std::vector<Tensor<T>>& p, const render::Raster& raster,
                  const TokenSeq& input, const TokenSeq& output, const ForwardOptions& opts) {
  if (output.empty()) throw std::invalid_argument("forward: output must hold at least one token");
  const Layout& l = params.layout;
  SequenceInput in{&raster, &input, &output};
  const Tensor<T> h = trunk(params, p, in, opts);
  const int t = h.dim(0);
  const int n_out = static_cast<int>(output.size());
  const Tensor<T> rows = nn::slice_rows(h, t - n_out, t);
  const Tensor<T> normed = nn::layer_norm(rows, at(p, l.final_gamma), at(p, l.final_beta));
  return nn::linear(normed, at(p, l.head_w), at(p, l.head_b));
}

template <typename T>
TokenSeq generate(const Params<T>& params, const render::Raster& raster, const TokenSeq& prompt,
                  const GenerateOptions& opts) {
  const GeoDecoderConfig& c = params.config;
  if (!(opts.temperature > 0)) throw std::invalid_argument("generate: temperature must be positive");
  const int max_len = opts.max_len > 0 ? opts.max_len : c.max_text_out;
  if (max_len > c.max_text_out)
    throw std::invalid_argument("generate: max_len " + std::to_string(max_len) + " exceeds max_text_out " +
                                std::to_string(c.max_text_out));
  TokenSeq out;
  // The last slot is a placeholder: it is shifted out of the sequence and only
  // marks where the next prediction is read.
  TokenSeq teacher{text::kPad};
  for (int step = 0; step < max_len; ++step) {
    Tape<T> tape;
    const auto p = bind<T>(tape, params, nullptr);
    const Tensor<T> logits = forward(params, p, raster, prompt, teacher);
    const int v = logits.dim(1);
    const T* row = logits.data() + static_cast<std::size_t>(step) * v;
    const T inv_t = static_cast<T>(1.0 / opts.temperature);
    int best = 0;
    T best_v = row[0] * inv_t;
    for (int j = 1; j < v; ++j)
      if (row[j] * inv_t > best_v) {
        best_v = row[j] * inv_t;
        best = j;
      }
    if (best == text::kEos) break;
    out.push_back(best);
    teacher.back() = best;
    teacher.push_back(text::kPad);
  }
  return out;
}

#define GEODECODER_INSTANTIATE_MODEL(T)                                                                       \
  template struct Params<T>;                                                                                  \
  template std::vector<Tensor<T>> bind(Tape<T>&, const Params<T>&, std::vector<std::vector<T>>*);             \
  template Tensor<T> patch_embed(const GeoDecoderConfig&, const Layout&, const std::vector<Tensor<T>>&,        \
                                 const render::Raster&);                                                      \
  template Tensor<T> block_forward(const GeoDecoderConfig&, const std::array<ExpertIndex, 2>&,                 \
                                   const std::vector<Tensor<T>>&, const Tensor<T>&, int, const nn::Mask&,      \
                                   const ForwardOptions&, std::uint64_t);                                     \
  template Tensor<T> trunk(const Params<T>&, const std::vector<Tensor<T>>&, const SequenceInput&,              \
                           const ForwardOptions&);                                                            \
  template Tensor<T> forward(const Params<T>&, const std::vector<Tensor<T>>&, const render::Raster&,           \
                             const TokenSeq&, const TokenSeq&, const ForwardOptions&);                        \
  template TokenSeq generate(const Params<T>&, const render::Raster&, const TokenSeq&, const GenerateOptions&);

GEODECODER_INSTANTIATE_MODEL(float)
GEODECODER_INSTANTIATE_MODEL(double)

template Params<double> Params<float>::cast<double>() const;
template Params<float> Params<double>::cast<float>() const;
template Params<float> Params<float>::cast<float>() const;
template Params<double> Params<double>::cast<double>() const;

#undef GEODECODER_INSTANTIATE_MODEL

}  // namespace geodecoder::model
