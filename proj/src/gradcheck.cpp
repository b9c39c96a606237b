// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#include "geodecoder/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "geodecoder/rng.hpp"

namespace geodecoder::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const std::function<double()>& f, const std::vector<CheckedTensor>& tensors,
                           const GradCheckOptions& opts) {
  if (!(opts.h > 0)) throw std::invalid_argument("grad_check: h must be positive");
  if (opts.samples_per_tensor <= 0) throw std::invalid_argument("grad_check: samples_per_tensor must be positive");
  GradCheckResult result;
  Rng rng(opts.seed);
  for (const CheckedTensor& t : tensors) {
    if (t.size == 0) continue;
    if (!t.values || !t.grad) throw std::invalid_argument("grad_check: tensor '" + t.name + "' has no storage");
    std::vector<std::size_t> picks;
    if (t.size <= static_cast<std::size_t>(opts.samples_per_tensor)) {
      picks.resize(t.size);
      std::iota(picks.begin(), picks.end(), std::size_t{0});
    } else {
      for (int i = 0; i < opts.samples_per_tensor; ++i) picks.push_back(rng.index(t.size));
    }
    for (std::size_t i : picks) {
      const double saved = t.values[i];
      t.values[i] = saved + opts.h;
      const double up = f();
      t.values[i] = saved - opts.h;
      const double down = f();
      t.values[i] = saved;
      const double numeric = (up - down) / (2 * opts.h);
      const double err = relative_error(t.grad[i], numeric, opts.floor);
      ++result.checked;
      if (err > result.max_rel_error || result.checked == 1) {
        result.max_rel_error = std::max(result.max_rel_error, err);
        if (err >= result.max_rel_error) {
          result.worst_tensor = t.name;
          result.worst_index = i;
          result.worst_analytic = t.grad[i];
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace geodecoder::nn
