// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace geodecoder::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Named substream of the run seed ("world", "dataset", "init", "train").
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view name);

/// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geodecoder::cli
