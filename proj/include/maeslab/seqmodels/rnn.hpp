// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "maeslab/diffcore/params.hpp"

namespace maeslab::seq {

/// Single-layer tanh RNN, h_t = tanh(W_x x_t + W_h h_{t-1} + b). Its hidden
/// states are the gate's context vectors.
class ContextRnn {
 public:
  ContextRnn(std::size_t hidden_dim, std::size_t input_dim, std::uint64_t seed);
  ContextRnn(const ContextRnn& other);
  ContextRnn& operator=(const ContextRnn& other);
  ContextRnn(ContextRnn&&) noexcept = default;
  ContextRnn& operator=(ContextRnn&&) noexcept = default;

  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  diff::ParamSet& params() noexcept { return params_; }
  const diff::ParamSet& params() const noexcept { return params_; }

  diff::Tensor initial_state(std::size_t batch) const;
  diff::Tensor step(const diff::Tensor& x, const diff::Tensor& h_prev) const;
  /// Per-step contexts, each [B, hidden_dim].
  std::vector<diff::Tensor> forward(std::span<const diff::Tensor> inputs) const;

 private:
  std::size_t hidden_dim_;
  std::size_t input_dim_;
  diff::ParamSet params_;
  diff::Tensor w_x_, w_h_, b_;

  void bind();
};

}  // namespace maeslab::seq
