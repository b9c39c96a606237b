// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "geodecoder/gradcheck.hpp"
#include "geodecoder/model.hpp"
#include "geodecoder/taskgen.hpp"
#include "geodecoder/textcodec.hpp"

namespace geodecoder::train {

using model::GeoDecoderConfig;
using model::Params;
using text::TokenSeq;

struct TrainHyper {
  int batch_size = 64;
  int epochs = 20;
  /// Overrides epochs when positive.
  int steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.01;
  int warmup = 100;
  double peak_lr = 1e-4;
  double dropout = 0.1;
  /// Global gradient-norm clip; 0 disables it.
  double max_grad_norm = 0.0;
  int log_every = 10;
  /// Shuffle and dropout stream; runs derive it from the run seed, so it is not part of the JSON form.
  std::uint64_t seed = 0;

  /// Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const TrainHyper&, const TrainHyper&) = default;
};

void to_json(nlohmann::json& j, const TrainHyper& h);
/// Missing fields keep their defaults.
void from_json(const nlohmann::json& j, TrainHyper& h);

/// Linear warmup to peak_lr over `warmup` steps, then linear decay to 0 at `total_steps`.
double lr_at(int step, const TrainHyper& h, int total_steps);

/// Mean token cross-entropy; <pad> targets are skipped.
template <typename T>
nn::Tensor<T> loss(const nn::Tensor<T>& logits, const TokenSeq& targets);

struct OptimizerState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::int64_t step = 0;

  static OptimizerState zeros(const Params<float>& p);
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

using Grads = std::vector<std::vector<float>>;

/// One AdamW update with bias correction and decoupled decay. Decay skips LN
/// affines and biases. Throws std::runtime_error naming a parameter with a
/// non-finite gradient before anything is modified.
void adamw_step(Params<float>& params, const Grads& grads, OptimizerState& state, const TrainHyper& h, double lr);

// One encoded training unit. `target` ends with <eos>.
struct Example {
  render::Raster raster;
  TokenSeq input;
  TokenSeq target;
};

/// Encodes prompt and answer; the answer gains a trailing <eos>.
Example encode_example(const text::Vocabulary& vocab, const tasks::Sample& s);

struct LogRecord {
  int step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

nlohmann::json to_json(const LogRecord& r);

struct TrainCallbacks {
  /// Every log_every steps and at the last step.
  std::function<void(const LogRecord&)> on_log;
  /// After the last step of each epoch, with the 1-based epoch number.
  std::function<void(int epoch, const Params<float>&, const OptimizerState&)> on_epoch;
};

int total_steps(const TrainHyper& h, std::size_t dataset_size);

/// Mean loss over a batch and the matching gradient, summed per sample in index order.
double batch_loss_and_grad(const Params<float>& params, const std::vector<const Example*>& batch, double dropout,
                           std::uint64_t dropout_key, Grads& grads, int threads);

/// Runs AdamW over shuffled mini-batches. Deterministic in (params, data, hyper)
/// regardless of thread count.
void train(Params<float>& params, OptimizerState& state, const std::vector<Example>& data, const TrainHyper& h,
           const TrainCallbacks& callbacks = {}, int threads = 1);

/// Full-model gradient check in double precision on one synthetic sample with dropout off.
nn::GradCheckResult check_model_gradients(const GeoDecoderConfig& config, std::uint64_t seed,
                                          const nn::GradCheckOptions& opts = {});

}  // namespace geodecoder::train
