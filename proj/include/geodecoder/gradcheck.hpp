// Copyright 2026 The GeoDecoder Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace geodecoder::nn {

struct GradCheckOptions {
  double h = 1e-5;
  /// Coordinates drawn per tensor; smaller tensors are checked exhaustively.
  int samples_per_tensor = 20;
  std::uint64_t seed = 0;
  /// Denominator floor: |a - n| / max(|a|, |n|, floor).
  double floor = 1e-5;
};

// A tensor under test: values are perturbed in place and restored; grad holds
// the analytic gradient at the unperturbed point.
struct CheckedTensor {
  std::string name;
  double* values = nullptr;
  const double* grad = nullptr;
  std::size_t size = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

double relative_error(double analytic, double numeric, double floor);

/// Central differences of `f` against the supplied analytic gradients.
GradCheckResult grad_check(const std::function<double()>& f, const std::vector<CheckedTensor>& tensors,
                           const GradCheckOptions& opts = {});

}  // namespace geodecoder::nn
