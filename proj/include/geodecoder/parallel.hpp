// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace geodecoder {

/// Worker cap from GEODECODER_THREADS, else the hardware concurrency; at least 1.
int worker_count();

/// Runs fn(0..n-1) on up to `threads` workers. Callers must make fn(i) independent
/// of scheduling; the exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = worker_count());

}  // namespace geodecoder
