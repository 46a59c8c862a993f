// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/seqmodels/rnn.hpp"

#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"

namespace maeslab::seq {

using namespace diff;

ContextRnn::ContextRnn(std::size_t hidden_dim, std::size_t input_dim, std::uint64_t seed)
    : hidden_dim_(hidden_dim), input_dim_(input_dim), params_(seed) {
  if (hidden_dim == 0 || input_dim == 0) throw ConfigError("ContextRnn: dimensions must be >= 1");
  params_.add("W_x", {hidden_dim, input_dim}, Init::glorot_uniform);
  params_.add("W_h", {hidden_dim, hidden_dim}, Init::glorot_uniform);
  params_.add("b", {hidden_dim}, Init::zeros);
  bind();
}

ContextRnn::ContextRnn(const ContextRnn& other)
    : hidden_dim_(other.hidden_dim_), input_dim_(other.input_dim_), params_(other.params_) {
  bind();
}

ContextRnn& ContextRnn::operator=(const ContextRnn& other) {
  if (this != &other) {
    hidden_dim_ = other.hidden_dim_;
    input_dim_ = other.input_dim_;
    params_ = other.params_;
    bind();
  }
  return *this;
}

void ContextRnn::bind() {
  w_x_ = params_.at("W_x");
  w_h_ = params_.at("W_h");
  b_ = params_.at("b");
}

Tensor ContextRnn::initial_state(std::size_t batch) const {
  return Tensor::zeros(batch == 0 ? Shape{hidden_dim_} : Shape{batch, hidden_dim_});
}

Tensor ContextRnn::step(const Tensor& x, const Tensor& h_prev) const {
  if (x.rank() == 0 || x.shape().back() != input_dim_ || h_prev.shape().back() != hidden_dim_)
    throw ConfigError("ContextRnn::step: input " + shape_string(x.shape()) + " / state " +
                      shape_string(h_prev.shape()) + " do not match d=" + std::to_string(input_dim_) +
                      ", c=" + std::to_string(hidden_dim_));
  return tanh(add(add(matmul_nt(x, w_x_), matmul_nt(h_prev, w_h_)), b_));
}

std::vector<Tensor> ContextRnn::forward(std::span<const Tensor> inputs) const {
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  if (inputs.empty()) return out;
  Tensor h = initial_state(inputs[0].rank() >= 2 ? inputs[0].dim(0) : 0);
  for (const auto& x : inputs) {
    h = step(x, h);
    out.push_back(h);
  }
  return out;
}

}  // namespace maeslab::seq
