// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <stdexcept>

#include "geodecoder/error.hpp"
#include "geodecoder/fileio.hpp"

namespace geodecoder::train {

namespace {

constexpr std::string_view kMagic = "GDCKPT ";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void append_floats(std::string& out, const std::vector<float>& v) {
  const std::size_t at = out.size();
  out.resize(at + v.size() * sizeof(float));
  if (!v.empty()) std::memcpy(out.data() + at, v.data(), v.size() * sizeof(float));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  const auto& specs = ck.params.layout.specs;
  nlohmann::json tensors = nlohmann::json::array();
  std::string payload;
  auto add_group = [&](const char* group, const std::vector<std::vector<float>>& arrays) {
    for (std::size_t i = 0; i < arrays.size(); ++i) {
      tensors.push_back({{"name", specs[i].name},
                         {"group", group},
                         {"shape", specs[i].shape},
                         {"offset", payload.size()},
                         {"count", arrays[i].size()}});
      append_floats(payload, arrays[i]);
    }
  };
  add_group("param", ck.params.values);
  if (ck.optimizer) {
    add_group("adam_m", ck.optimizer->m);
    add_group("adam_v", ck.optimizer->v);
  }
  nlohmann::json header{{"ckpt_format", kCheckpointFormat},
                        {"config", ck.params.config},
                        {"step", ck.step},
                        {"optimizer_step", ck.optimizer ? ck.optimizer->step : 0},
                        {"vocab", ck.vocab.to_file()},
                        {"tensors", tensors}};
  const std::string h = header.dump();
  std::string out = std::string(kMagic) + std::to_string(kCheckpointFormat) + " " + std::to_string(h.size()) + "\n";
  out += h;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw ParseError("not a checkpoint: missing GDCKPT magic", 0);
  std::size_t pos = kMagic.size();
  auto read_number = [&](char terminator) {
    const std::size_t start = pos;
    std::size_t value = 0;
    const auto [end, ec] = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), value);
    if (ec != std::errc() || end == bytes.data() + pos) throw ParseError("expected a number in the checkpoint preamble", start);
    pos = static_cast<std::size_t>(end - bytes.data());
    if (pos >= bytes.size() || bytes[pos] != terminator) throw ParseError("malformed checkpoint preamble", pos);
    ++pos;
    return value;
  };
  const std::size_t format = read_number(' ');
  if (format != static_cast<std::size_t>(kCheckpointFormat))
    throw ParseError("unsupported checkpoint format " + std::to_string(format), kMagic.size());
  const std::size_t header_len = read_number('\n');
  if (bytes.size() - pos < header_len) throw ParseError("checkpoint truncated inside the header", bytes.size());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), pos);
  }
  const std::size_t base = pos + header_len;

  Checkpoint ck;
  try {
    if (header.at("ckpt_format").get<int>() != kCheckpointFormat)
      throw ParseError("header ckpt_format disagrees with the preamble", pos);
    const auto config = header.at("config").get<model::GeoDecoderConfig>();
    ck.params = model::Params<float>::zeros(config);
    ck.step = header.at("step").get<std::int64_t>();
    ck.vocab = text::Vocabulary::from_file(header.at("vocab").get<std::string>());

    const auto& specs = ck.params.layout.specs;
    bool has_m = false, has_v = false;
    OptimizerState opt = OptimizerState::zeros(ck.params);
    opt.step = header.value("optimizer_step", std::int64_t{0});
    std::vector<bool> seen(specs.size() * 3, false);
    for (const auto& t : header.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      const std::string group = t.at("group").get<std::string>();
      const int idx = ck.params.layout.find(name);
      const auto& spec = specs[static_cast<std::size_t>(idx)];
      if (t.at("shape").get<nn::Shape>() != spec.shape)
        throw std::runtime_error("checkpoint tensor " + name + " has shape " + nn::shape_str(t.at("shape").get<nn::Shape>()) +
                                 ", config expects " + nn::shape_str(spec.shape));
      std::vector<float>* dst = nullptr;
      int g = 0;
      if (group == "param") {
        dst = &ck.params.values[static_cast<std::size_t>(idx)];
      } else if (group == "adam_m") {
        dst = &opt.m[static_cast<std::size_t>(idx)];
        has_m = true;
        g = 1;
      } else if (group == "adam_v") {
        dst = &opt.v[static_cast<std::size_t>(idx)];
        has_v = true;
        g = 2;
      } else {
        throw std::runtime_error("checkpoint tensor " + name + " has unknown group '" + group + "'");
      }
      seen[static_cast<std::size_t>(idx) * 3 + static_cast<std::size_t>(g)] = true;
      const std::size_t count = t.at("count").get<std::size_t>();
      const std::size_t offset = t.at("offset").get<std::size_t>();
      if (count != dst->size())
        throw std::runtime_error("checkpoint tensor " + name + " lists " + std::to_string(count) + " values, expected " +
                                 std::to_string(dst->size()));
      const std::size_t need = base + offset + count * sizeof(float);
      if (need > bytes.size())
        throw ParseError("checkpoint truncated in tensor " + name + " (" + group + ")", bytes.size());
      if (count) std::memcpy(dst->data(), bytes.data() + base + offset, count * sizeof(float));
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (!seen[i * 3]) throw std::runtime_error("checkpoint is missing tensor " + specs[i].name);
      if ((has_m && !seen[i * 3 + 1]) || (has_v && !seen[i * 3 + 2]))
        throw std::runtime_error("checkpoint is missing optimizer state for " + specs[i].name);
    }
    if (has_m != has_v) throw std::runtime_error("checkpoint has only one of the two AdamW moments");
    if (has_m) ck.optimizer = std::move(opt);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), pos);
  } catch (const ValidationError& e) {
    throw ParseError(std::string("bad checkpoint config: ") + e.what(), pos);
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) { write_file(path, serialize_checkpoint(ck)); }

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace geodecoder::train
