// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "geodecoder/checkpoint.hpp"
#include "geodecoder/dataset.hpp"
#include "geodecoder/error.hpp"
#include "geodecoder/fileio.hpp"
#include "geodecoder/metrics.hpp"
#include "geodecoder/parallel.hpp"
#include "geodecoder/rng.hpp"
#include "geodecoder/run_config.hpp"
#include "geodecoder/world_io.hpp"

namespace geodecoder::cli {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view name) { return hash_combine(run_seed, fnv1a(name)); }

namespace {

constexpr std::string_view kWorldFile = "world.json";
constexpr std::string_view kVocabFile = "vocab.txt";
constexpr std::string_view kLogFile = "log.jsonl";
constexpr std::string_view kFinalCheckpoint = "final.ckpt";
constexpr double kGradCheckTolerance = 1e-4;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string split = "test";
  bool force = false;
  std::string image;
  std::string prompt;
  std::string kind = "ElementId";
};

RunConfig resolve_config(const Flags& f) {
  RunConfig c = f.config.empty() ? run_config_from_json(nlohmann::json::object()) : load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  c.train.seed = derive_seed(c.seed, "train");
  return c;
}

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p)) throw IoError(p.string() + " already exists (pass --force to overwrite)");
}

void write_output(const fs::path& p, std::string_view bytes, bool force) {
  refuse_overwrite(p, force);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file(p, bytes);
}

world::MapWorld world_for(const RunConfig& c) {
  if (fs::exists(c.world_path)) return world::load_world(c.world_path);
  return world::generate_world(derive_seed(c.seed, "world"), c.world);
}

text::Vocabulary vocab_for(const world::MapWorld& w) { return text::Vocabulary::build(tasks::corpus_for(w)); }

model::Params<float> params_for(const RunConfig& c, const text::Vocabulary& vocab) {
  if (vocab.size() > c.model.vocab)
    throw ValidationError("vocab", "dataset needs " + std::to_string(vocab.size()) + " tokens, model allows " +
                                       std::to_string(c.model.vocab));
  model::GeoDecoderConfig mc = c.model;
  mc.vocab = vocab.size();
  return model::Params<float>::init(mc, derive_seed(c.seed, "init"));
}

int cmd_worldgen(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  const fs::path path = f.out.empty() ? fs::path(c.world_path) : fs::path(f.out);
  const auto w = world::generate_world(derive_seed(c.seed, "world"), c.world);
  write_output(path, world::serialize_world(w), f.force);
  out << "wrote " << path.string() << ": " << w.roads.size() << " roads, " << w.aois.size() << " AOIs, " << w.pois.size()
      << " POIs\n";
  return kExitOk;
}

int cmd_datagen(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  const fs::path dir = f.out.empty() ? fs::path(c.dataset_dir) : fs::path(f.out);
  refuse_overwrite(dir / tasks::kManifestFile, f.force);
  const auto w = world_for(c);
  const auto vocab = vocab_for(w);
  tasks::DirectorySink sink(dir, f.force);
  const auto manifest = tasks::build_dataset(w, c.mix, derive_seed(c.seed, "dataset"), sink, c.policy, worker_count());
  sink.write(std::string(kWorldFile), world::serialize_world(w));
  sink.write(std::string(kVocabFile), vocab.to_file());
  out << "wrote " << manifest.size() << " samples to " << dir.string() << "\n";
  return kExitOk;
}

std::vector<tasks::ManifestRow> rows_of_split(const tasks::Manifest& m, tasks::Split split) {
  std::vector<tasks::ManifestRow> rows;
  for (const auto& r : m)
    if (r.split == split) rows.push_back(r);
  return rows;
}

int cmd_train(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  const fs::path dir = f.out.empty() ? fs::path(c.run_dir) : fs::path(f.out);
  refuse_overwrite(dir / kFinalCheckpoint, f.force);
  const fs::path data(c.dataset_dir);
  const auto vocab = text::Vocabulary::from_file(read_file(data / kVocabFile));
  const auto rows = rows_of_split(tasks::load_manifest(data), tasks::Split::train);
  if (rows.empty()) throw ValidationError("dataset", "train split of " + data.string() + " is empty");
  std::vector<train::Example> examples(rows.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    examples[i] = train::encode_example(vocab, tasks::load_sample(data, rows[i]));
  });

  model::Params<float> params = params_for(c, vocab);
  train::OptimizerState state;
  if (!f.checkpoint.empty()) {
    auto ck = train::load_checkpoint(f.checkpoint);
    if (!(ck.vocab == vocab)) throw ValidationError("checkpoint", "vocabulary differs from the dataset's");
    params = std::move(ck.params);
    if (ck.optimizer) state = std::move(*ck.optimizer);
  }

  fs::create_directories(dir);
  std::ofstream log(dir / kLogFile, std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write " + (dir / kLogFile).string());
  train::TrainCallbacks cb;
  cb.on_log = [&](const train::LogRecord& r) {
    log << train::to_json(r).dump() << "\n";
    log.flush();
    out << "step " << r.step << " lr " << r.lr << " loss " << r.loss << "\n";
  };
  cb.on_epoch = [&](int epoch, const model::Params<float>& p, const train::OptimizerState& s) {
    std::ostringstream name;
    name << "epoch-" << std::setw(3) << std::setfill('0') << epoch << ".ckpt";
    train::save_checkpoint({p, s, vocab, s.step}, dir / name.str());
  };
  out << "training on " << examples.size() << " samples, " << params.count() << " parameters\n";
  train::train(params, state, examples, c.train, cb, worker_count());
  train::save_checkpoint({params, state, vocab, state.step}, dir / kFinalCheckpoint);
  out << "wrote " << (dir / kFinalCheckpoint).string() << "\n";
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  const tasks::Split split = tasks::split_from_string(f.split);
  const fs::path data(c.dataset_dir);
  const fs::path ckpt = f.checkpoint.empty() ? fs::path(c.run_dir) / kFinalCheckpoint : fs::path(f.checkpoint);
  const fs::path report_path =
      f.out.empty() ? fs::path(c.run_dir) / ("eval-" + std::string(tasks::to_string(split)) + ".json") : fs::path(f.out);
  refuse_overwrite(report_path, f.force);

  const auto ck = train::load_checkpoint(ckpt);
  const auto w = world::load_world(data / kWorldFile);
  auto rows = rows_of_split(tasks::load_manifest(data), split);
  if (c.eval.max_samples > 0 && rows.size() > static_cast<std::size_t>(c.eval.max_samples))
    rows.resize(static_cast<std::size_t>(c.eval.max_samples));
  if (rows.empty()) throw ValidationError("split", "no samples in split " + f.split);

  std::vector<std::string> preds(rows.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    const auto s = tasks::load_sample(data, rows[i]);
    const auto ids = model::generate(ck.params, s.raster, ck.vocab.encode(s.input_text));
    preds[i] = ck.vocab.decode(ids);
  });
  metrics::Scorer scorer(&w, c.eval.road_threshold_m);
  for (std::size_t i = 0; i < rows.size(); ++i)
    scorer.add(rows[i].kind, tasks::truth_of(rows[i].kind, rows[i].truth, rows[i].viewport), preds[i]);
  nlohmann::json report = scorer.report();
  report["split"] = tasks::to_string(split);
  report["checkpoint"] = ckpt.string();
  const std::string text = report.dump(2) + "\n";
  write_output(report_path, text, f.force);
  out << text;
  return kExitOk;
}

int cmd_infer(const Flags& f, std::ostream& out) {
  if (f.checkpoint.empty()) throw ValidationError("checkpoint", "infer needs --checkpoint");
  if (f.image.empty()) throw ValidationError("image", "infer needs --image");
  const auto ck = train::load_checkpoint(f.checkpoint);
  const auto raster = render::read_ppm(read_file(f.image));
  const auto ids = model::generate(ck.params, raster, ck.vocab.encode(f.prompt));
  out << ck.vocab.decode(ids) << "\n";
  return kExitOk;
}

int cmd_gradcheck(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  const auto r = train::check_model_gradients(c.model, derive_seed(c.seed, "gradcheck"));
  out << "checked " << r.checked << " coordinates, max relative error " << r.max_rel_error << " (" << r.worst_tensor
      << "[" << r.worst_index << "] analytic " << r.worst_analytic << " numeric " << r.worst_numeric << ")\n";
  return r.max_rel_error <= kGradCheckTolerance ? kExitOk : kExitValidation;
}

int cmd_render(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f);
  if (f.out.empty()) throw ValidationError("out", "render needs --out <file.ppm>");
  const auto kind = tasks::task_kind_from_string(f.kind);
  const auto w = world_for(c);
  Rng rng(derive_seed(c.seed, "render"));
  const auto s = tasks::make_sample(w, kind, c.policy, rng);
  write_output(f.out, render::write_ppm(s.raster), f.force);
  out << "prompt: " << s.input_text << "\nanswer: " << s.target_text << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic map world, dataset, and multimodal decoder toolkit", "geodecoder"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "Run configuration (JSON)");
    sub->add_option("--seed", f.seed, "Run seed; overrides the config");
    sub->add_flag("--force", f.force, "Overwrite existing outputs");
  };
  auto* worldgen = app.add_subcommand("worldgen", "Generate a synthetic world file");
  common(worldgen);
  worldgen->add_option("--out", f.out, "World file path");
  auto* datagen = app.add_subcommand("datagen", "Render a dataset of samples");
  common(datagen);
  datagen->add_option("--out", f.out, "Dataset directory");
  auto* train = app.add_subcommand("train", "Train the model");
  common(train);
  train->add_option("--out", f.out, "Run directory");
  train->add_option("--checkpoint", f.checkpoint, "Initial checkpoint");
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  common(eval);
  eval->add_option("--checkpoint", f.checkpoint, "Checkpoint to evaluate");
  eval->add_option("--split", f.split, "train, val, or test")->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--out", f.out, "Report path");
  auto* infer = app.add_subcommand("infer", "Answer a prompt about an image");
  infer->add_option("--checkpoint", f.checkpoint, "Checkpoint")->required();
  infer->add_option("--image", f.image, "PPM image")->required();
  infer->add_option("--prompt", f.prompt, "Prompt text")->required();
  auto* gradcheck = app.add_subcommand("gradcheck", "Check model gradients against finite differences");
  common(gradcheck);
  auto* render_cmd = app.add_subcommand("render", "Render one generated sample to PPM");
  common(render_cmd);
  render_cmd->add_option("--kind", f.kind, "Task kind, e.g. TagId");
  render_cmd->add_option("--out", f.out, "Output PPM path");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (worldgen->parsed()) return cmd_worldgen(f, out);
    if (datagen->parsed()) return cmd_datagen(f, out);
    if (train->parsed()) return cmd_train(f, out);
    if (eval->parsed()) return cmd_eval(f, out);
    if (infer->parsed()) return cmd_infer(f, out);
    if (gradcheck->parsed()) return cmd_gradcheck(f, out);
    if (render_cmd->parsed()) return cmd_render(f, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace geodecoder::cli
