// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "geodecoder/ops.hpp"
#include "geodecoder/render.hpp"
#include "geodecoder/tensor.hpp"
#include "geodecoder/textcodec.hpp"

namespace geodecoder::model {

using nn::Shape;
using nn::Tape;
using nn::Tensor;
using text::TokenSeq;

struct GeoDecoderConfig {
  int layers = 2;
  int hidden = 64;
  int heads = 4;
  int ffn_dim = 256;
  int vocab = 512;
  int image_size = 96;
  int patch_size = 16;
  int max_text_in = 112;
  int max_text_out = 80;
  double dropout = 0.1;
  double temperature = 1.0;

  /// The 12-layer, 768-wide configuration with 196 image and 60 text positions.
  static GeoDecoderConfig full();
  static GeoDecoderConfig desk();

  int patches_per_side() const { return image_size / patch_size; }
  int num_patches() const { return patches_per_side() * patches_per_side(); }
  int patch_dim() const { return 3 * patch_size * patch_size; }
  int head_dim() const { return hidden / heads; }
  int max_text() const { return max_text_in + max_text_out; }

  /// Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const GeoDecoderConfig&, const GeoDecoderConfig&) = default;
};

void to_json(nlohmann::json& j, const GeoDecoderConfig& c);
/// Missing fields keep their desk defaults.
void from_json(const nlohmann::json& j, GeoDecoderConfig& c);

/// Closed-form parameter count.
std::int64_t count_params(const GeoDecoderConfig& c);

enum class Modality { image = 0, text = 1 };

// Indices into the flat parameter list for one modality expert of one layer.
struct ExpertIndex {
  int ln1_gamma, ln1_beta;
  int wq, bq, wk, bk, wv, bv, wo, bo;
  int ln2_gamma, ln2_beta;
  int w1, b1, w2, b2;
};

struct ParamSpec {
  std::string name;
  Shape shape;
  enum class Init { normal, zeros, ones } init;
  /// Weight decay applies; false for LN affines and biases.
  bool decay;
};

struct Layout {
  std::vector<ParamSpec> specs;
  int tok_emb, patch_w, patch_b, img_pos, txt_pos;
  std::vector<std::array<ExpertIndex, 2>> blocks;
  int final_gamma, final_beta, head_w, head_b;

  /// Fixed enumeration order; names look like "blocks.0.text.wq".
  static Layout build(const GeoDecoderConfig& c);
  int find(const std::string& name) const;
};

template <typename T>
struct Params {
  GeoDecoderConfig config;
  Layout layout;
  std::vector<std::vector<T>> values;

  /// Truncated normal (std 0.02, cut at 2 std) for projections and embeddings.
  static Params init(const GeoDecoderConfig& c, std::uint64_t seed);
  static Params zeros(const GeoDecoderConfig& c);

  std::size_t count() const;
  /// Zeroes every tensor belonging to one modality expert across all layers.
  void zero_expert(Modality m);

  template <typename U>
  Params<U> cast() const;
};

/// Leaves for every parameter on `tape`; grads accumulate into `grads` when it is non-null.
template <typename T>
std::vector<Tensor<T>> bind(Tape<T>& tape, const Params<T>& params, std::vector<std::vector<T>>* grads);

nn::Mask build_attention_mask(int n_img, int n_in, int n_out);

struct ForwardOptions {
  /// 0 disables dropout entirely.
  double dropout = 0.0;
  std::uint64_t dropout_key = 0;
};

/// Image tokens for a raster of config.image_size squared; pixels scaled to [0, 1].
template <typename T>
Tensor<T> patch_embed(const GeoDecoderConfig& c, const Layout& l, const std::vector<Tensor<T>>& p,
                      const render::Raster& raster);

/// One modality-expert block. Rows [0, n_img) are image tokens, the rest text.
template <typename T>
Tensor<T> block_forward(const GeoDecoderConfig& c, const std::array<ExpertIndex, 2>& block,
                        const std::vector<Tensor<T>>& p, const Tensor<T>& x, int n_img, const nn::Mask& mask,
                        const ForwardOptions& opts, std::uint64_t layer_key);

// What the trunk sees. A null image gives a text-only sequence; a null
// input gives an image-only sequence with no text tokens at all.
struct SequenceInput {
  const render::Raster* image = nullptr;
  const TokenSeq* input = nullptr;
  const TokenSeq* output = nullptr;
};

/// Final hidden states before the last LN, [n_img + text length, d].
/// Text is <bos> input <sep> output[0..n-2]: the output block starts at <sep>.
template <typename T>
Tensor<T> trunk(const Params<T>& params, const std::vector<Tensor<T>>& p, const SequenceInput& in,
                const ForwardOptions& opts = {});

/// Logits [n_out, V]; row t predicts output[t] from output[0..t-1].
template <typename T>
Tensor<T> forward(const Params<T>& params, const std::vector<Tensor<T>>& p, const render::Raster& raster,
                  const TokenSeq& input, const TokenSeq& output, const ForwardOptions& opts = {});

struct GenerateOptions {
  double temperature = 1.0;
  /// 0 means config.max_text_out.
  int max_len = 0;
};

/// Greedy decoding; ties go to the lowest id. The returned ids exclude <eos>.
template <typename T>
TokenSeq generate(const Params<T>& params, const render::Raster& raster, const TokenSeq& prompt,
                  const GenerateOptions& opts = {});

extern template struct Params<float>;
extern template struct Params<double>;

}  // namespace geodecoder::model
