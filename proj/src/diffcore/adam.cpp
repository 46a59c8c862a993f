// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/diffcore/adam.hpp"

#include <cmath>
#include <string>

#include "maeslab/errors.hpp"

namespace maeslab::diff {

void adam_step(std::span<Tensor> params, AdamState& state) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw UsageError("adam_step: parameter " + std::to_string(i) + " has no gradient");
    }
  }
  if (state.step_ == 0) {
    state.m_.clear();
    state.v_.clear();
    for (const auto& p : params) {
      state.m_.emplace_back(p.size(), 0.0);
      state.v_.emplace_back(p.size(), 0.0);
    }
  } else if (state.m_.size() != params.size()) {
    throw UsageError("adam_step: parameter list changed between steps");
  }

  const auto& cfg = state.config_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m_[i];
    auto& v = state.v_[i];
    if (m.size() != params[i].size()) throw UsageError("adam_step: parameter shape changed between steps");
    auto values = params[i].mutable_values();
    auto grad = params[i].mutable_grad();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      grad[j] = 0.0;
    }
  }
}

void adam_step(ParamSet& params, AdamState& state) {
  auto tensors = params.tensors();
  adam_step(std::span<Tensor>(tensors), state);
}

}  // namespace maeslab::diff
