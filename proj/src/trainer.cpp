// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "geodecoder/error.hpp"
#include "geodecoder/parallel.hpp"
#include "geodecoder/rng.hpp"

namespace geodecoder::train {

void TrainHyper::validate() const {
  if (batch_size <= 0) throw ValidationError("batch_size", "must be positive, got " + std::to_string(batch_size));
  if (epochs < 0) throw ValidationError("epochs", "must be non-negative");
  if (steps < 0) throw ValidationError("steps", "must be non-negative");
  if (epochs == 0 && steps == 0) throw ValidationError("steps", "one of epochs or steps must be positive");
  if (!(beta1 > 0 && beta1 < 1)) throw ValidationError("beta1", "must lie in (0, 1)");
  if (!(beta2 > 0 && beta2 < 1)) throw ValidationError("beta2", "must lie in (0, 1)");
  if (!(eps > 0)) throw ValidationError("eps", "must be positive");
  if (!(weight_decay >= 0)) throw ValidationError("weight_decay", "must be non-negative");
  if (warmup < 0) throw ValidationError("warmup", "must be non-negative");
  if (!(peak_lr >= 0)) throw ValidationError("peak_lr", "must be non-negative");
  if (!(dropout >= 0 && dropout < 1)) throw ValidationError("dropout", "must lie in [0, 1)");
  if (!(max_grad_norm >= 0)) throw ValidationError("max_grad_norm", "must be non-negative");
  if (log_every <= 0) throw ValidationError("log_every", "must be positive");
}

void to_json(nlohmann::json& j, const TrainHyper& h) {
  j = nlohmann::json{{"batch_size", h.batch_size}, {"epochs", h.epochs},
                     {"steps", h.steps},           {"beta1", h.beta1},
                     {"beta2", h.beta2},           {"eps", h.eps},
                     {"weight_decay", h.weight_decay}, {"warmup", h.warmup},
                     {"peak_lr", h.peak_lr},       {"dropout", h.dropout},
                     {"max_grad_norm", h.max_grad_norm}, {"log_every", h.log_every}};
}

void from_json(const nlohmann::json& j, TrainHyper& h) {
  if (!j.is_object()) throw ValidationError("train", "expected an object");
  auto get = [&j](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(key, e.what());
    }
  };
  get("batch_size", h.batch_size);
  get("epochs", h.epochs);
  get("steps", h.steps);
  get("beta1", h.beta1);
  get("beta2", h.beta2);
  get("eps", h.eps);
  get("weight_decay", h.weight_decay);
  get("warmup", h.warmup);
  get("peak_lr", h.peak_lr);
  get("dropout", h.dropout);
  get("max_grad_norm", h.max_grad_norm);
  get("log_every", h.log_every);
}

double lr_at(int step, const TrainHyper& h, int total) {
  if (step < 1) throw std::invalid_argument("lr_at: steps count from 1");
  if (step <= h.warmup) return h.peak_lr * static_cast<double>(step) / h.warmup;
  if (step >= total) return 0.0;
  return h.peak_lr * static_cast<double>(total - step) / static_cast<double>(total - h.warmup);
}

template <typename T>
nn::Tensor<T> loss(const nn::Tensor<T>& logits, const TokenSeq& targets) {
  return nn::cross_entropy(logits, targets, text::kPad);
}

template nn::Tensor<float> loss(const nn::Tensor<float>&, const TokenSeq&);
template nn::Tensor<double> loss(const nn::Tensor<double>&, const TokenSeq&);

OptimizerState OptimizerState::zeros(const Params<float>& p) {
  OptimizerState s;
  for (const auto& v : p.values) {
    s.m.emplace_back(v.size(), 0.0f);
    s.v.emplace_back(v.size(), 0.0f);
  }
  return s;
}

void adamw_step(Params<float>& params, const Grads& grads, OptimizerState& state, const TrainHyper& h, double lr) {
  const std::size_t n = params.values.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n)
    throw std::invalid_argument("adamw_step: gradient or state layout does not match the parameters");
  for (std::size_t i = 0; i < n; ++i) {
    if (grads[i].size() != params.values[i].size())
      throw std::invalid_argument("adamw_step: gradient size mismatch for " + params.layout.specs[i].name);
    for (float g : grads[i])
      if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient in parameter " + params.layout.specs[i].name);
  }
  const std::int64_t t = ++state.step;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    auto& w = params.values[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    const double decay = params.layout.specs[i].decay ? 1.0 - lr * h.weight_decay : 1.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k];
      const double mk = h.beta1 * m[k] + (1.0 - h.beta1) * gk;
      const double vk = h.beta2 * v[k] + (1.0 - h.beta2) * gk * gk;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double update = (mk / c1) / (std::sqrt(vk / c2) + h.eps);
      w[k] = static_cast<float>(w[k] * decay - lr * update);
    }
  }
}

Example encode_example(const text::Vocabulary& vocab, const tasks::Sample& s) {
  Example e;
  e.raster = s.raster;
  e.input = vocab.encode(s.input_text);
  e.target = vocab.encode(s.target_text);
  e.target.push_back(text::kEos);
  return e;
}

nlohmann::json to_json(const LogRecord& r) { return {{"step", r.step}, {"lr", r.lr}, {"loss", r.loss}}; }

int total_steps(const TrainHyper& h, std::size_t dataset_size) {
  if (h.steps > 0) return h.steps;
  const std::size_t per_epoch = (dataset_size + static_cast<std::size_t>(h.batch_size) - 1) / static_cast<std::size_t>(h.batch_size);
  return static_cast<int>(per_epoch * static_cast<std::size_t>(h.epochs));
}

double batch_loss_and_grad(const Params<float>& params, const std::vector<const Example*>& batch, double dropout,
                           std::uint64_t dropout_key, Grads& grads, int threads) {
  if (batch.empty()) throw std::invalid_argument("batch_loss_and_grad: empty batch");
  const std::size_t b = batch.size();
  std::vector<Grads> per(b);
  std::vector<double> losses(b);
  parallel_for(
      b,
      [&](std::size_t i) {
        nn::Tape<float> tape;
        const auto p = model::bind<float>(tape, params, &per[i]);
        model::ForwardOptions fo{dropout, hash_combine(dropout_key, i)};
        const auto logits = model::forward(params, p, batch[i]->raster, batch[i]->input, batch[i]->target, fo);
        const auto l = loss(logits, batch[i]->target);
        losses[i] = l.item();
        tape.backward(l);
      },
      threads);
  grads.resize(params.values.size());
  const float inv = 1.0f / static_cast<float>(b);
  for (std::size_t t = 0; t < params.values.size(); ++t) {
    auto& g = grads[t];
    g.assign(params.values[t].size(), 0.0f);
    for (std::size_t i = 0; i < b; ++i) {
      const auto& src = per[i][t];
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += src[k];
    }
    for (float& x : g) x *= inv;
  }
  double total = 0;
  for (double l : losses) total += l;
  return total / static_cast<double>(b);
}

void train(Params<float>& params, OptimizerState& state, const std::vector<Example>& data, const TrainHyper& h,
           const TrainCallbacks& callbacks, int threads) {
  h.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (state.m.size() != params.values.size()) state = OptimizerState::zeros(params);
  const int total = total_steps(h, data.size());
  const std::size_t bs = static_cast<std::size_t>(h.batch_size);

  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();
  int epoch = 0;
  Grads grads;
  for (int step = 1; step <= total; ++step) {
    std::vector<const Example*> batch;
    while (batch.size() < bs) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(hash_combine(h.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        cursor = 0;
      }
      batch.push_back(&data[order[cursor++]]);
      if (cursor == order.size()) break;
    }
    const std::uint64_t key = hash_combine(hash_combine(h.seed, 0x64726f70ULL), static_cast<std::uint64_t>(step));
    const double l = batch_loss_and_grad(params, batch, h.dropout, key, grads, threads);
    if (!std::isfinite(l)) throw std::runtime_error("non-finite loss at step " + std::to_string(step));
    if (h.max_grad_norm > 0) {
      double sq = 0;
      for (const auto& g : grads)
        for (float x : g) sq += static_cast<double>(x) * x;
      const double norm = std::sqrt(sq);
      if (norm > h.max_grad_norm) {
        const float s = static_cast<float>(h.max_grad_norm / norm);
        for (auto& g : grads)
          for (float& x : g) x *= s;
      }
    }
    const double lr = lr_at(step, h, total);
    adamw_step(params, grads, state, h, lr);
    if (callbacks.on_log && (step % h.log_every == 0 || step == total)) callbacks.on_log({step, lr, l});
    if (cursor == order.size()) {
      ++epoch;
      if (callbacks.on_epoch) callbacks.on_epoch(epoch, params, state);
    }
  }
}

nn::GradCheckResult check_model_gradients(const GeoDecoderConfig& config, std::uint64_t seed,
                                          const nn::GradCheckOptions& opts) {
  GeoDecoderConfig c = config;
  c.dropout = 0.0;
  auto params = Params<double>::init(c, seed);
  Rng rng(hash_combine(seed, 0x67726164ULL));
  render::Raster raster(c.image_size, c.image_size);
  for (auto& px : raster.pixels()) px = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  auto token = [&] { return static_cast<int>(rng.uniform_int(text::kNumSpecials, c.vocab - 1)); };
  TokenSeq input(6), target(5);
  for (auto& t : input) t = token();
  for (auto& t : target) t = token();
  target.back() = text::kEos;

  auto eval = [&](std::vector<std::vector<double>>* grads) {
    nn::Tape<double> tape;
    const auto p = model::bind<double>(tape, params, grads);
    const auto l = loss(model::forward(params, p, raster, input, target), target);
    if (grads) tape.backward(l);
    return l.item();
  };
  std::vector<std::vector<double>> grads;
  eval(&grads);
  std::vector<nn::CheckedTensor> tensors;
  for (std::size_t i = 0; i < params.values.size(); ++i)
    tensors.push_back({params.layout.specs[i].name, params.values[i].data(), grads[i].data(), params.values[i].size()});
  return nn::grad_check([&] { return eval(nullptr); }, tensors, opts);
}

}  // namespace geodecoder::train
