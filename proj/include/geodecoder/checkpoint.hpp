// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "geodecoder/model.hpp"
#include "geodecoder/textcodec.hpp"
#include "geodecoder/trainer.hpp"

namespace geodecoder::train {

inline constexpr int kCheckpointFormat = 1;

//   GDCKPT 1 <header bytes>\n
//   <JSON header: ckpt_format, config, step, vocab, tensors[{name, group, shape, offset, count}]>
//   <raw little-endian float32 arrays at the listed byte offsets from the end of the header>
struct Checkpoint {
  model::Params<float> params;
  std::optional<OptimizerState> optimizer;
  text::Vocabulary vocab;
  std::int64_t step = 0;
};

std::string serialize_checkpoint(const Checkpoint& ck);
/// Throws ParseError with the failing byte offset, or std::runtime_error naming a mismatched tensor.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace geodecoder::train
