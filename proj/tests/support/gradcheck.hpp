// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

// Central finite-difference oracle for the reverse-mode engine. It only ever
// evaluates the forward pass; no backward code is involved in the reference.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "maeslab/diffcore/ops.hpp"
#include "maeslab/diffcore/tensor.hpp"

namespace maeslab::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

/// Relative error with the denominator floored at 1e-3 so that gradients
/// which are analytically zero are compared on an absolute scale.
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / denom;
}

/// Compares grads from backward() against (f(x+h) - f(x-h)) / 2h for every
/// entry of every tensor in `wrt`. `loss` must rebuild the graph on each call.
inline GradCheckResult check_gradients(const std::function<diff::Tensor()>& loss,
                                       std::vector<diff::Tensor> wrt, double h = 1e-5) {
  for (auto& p : wrt) p.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& p : wrt) analytic.emplace_back(p.grad().begin(), p.grad().end());

  GradCheckResult result;
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    auto values = wrt[i].mutable_values();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const double up = loss().item();
      values[j] = saved - h;
      const double down = loss().item();
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[i][j], numeric);
      ++result.checked;
      if (err > result.max_rel_error || std::isnan(err)) {
        result.max_rel_error = std::isnan(err) ? INFINITY : err;
        result.worst = "tensor " + std::to_string(i) + " entry " + std::to_string(j) +
                       ": analytic " + std::to_string(analytic[i][j]) + " numeric " +
                       std::to_string(numeric);
      }
    }
  }
  for (auto& p : wrt) p.zero_grad();
  return result;
}

inline diff::Tensor random_parameter(diff::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(diff::numel(shape));
  for (auto& x : v) x = dist(rng);
  return diff::Tensor::parameter(std::move(shape), std::move(v));
}

inline diff::Tensor random_constant(diff::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(diff::numel(shape));
  for (auto& x : v) x = dist(rng);
  return diff::Tensor::constant(std::move(shape), std::move(v));
}

/// Weighted sum of `out` with fixed random weights, so every output entry
/// contributes to the scalar being checked.
inline diff::Tensor probe_loss(const diff::Tensor& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return diff::sum(diff::mul(out, random_constant(out.shape(), rng)));
}

}  // namespace maeslab::testing
