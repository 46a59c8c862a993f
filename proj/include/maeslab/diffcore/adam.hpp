// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maeslab/diffcore/params.hpp"
#include "maeslab/diffcore/tensor.hpp"

namespace maeslab::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t step() const noexcept { return step_; }
  const std::vector<std::vector<double>>& first_moments() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moments() const noexcept { return v_; }

 private:
  friend void adam_step(std::span<Tensor> params, AdamState& state);

  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// One bias-corrected Adam update over `params`, then zeroes their grads.
/// The moment buffers bind to the parameter list on the first call; later
/// calls must pass parameters of the same shapes in the same order.
void adam_step(std::span<Tensor> params, AdamState& state);
void adam_step(ParamSet& params, AdamState& state);

}  // namespace maeslab::diff
