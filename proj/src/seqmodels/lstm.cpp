// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/seqmodels/lstm.hpp"

#include <algorithm>

#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"

namespace maeslab::seq {

using namespace diff;

std::string to_string(CellVariant variant) {
  return variant == CellVariant::standard ? "standard" : "squashed";
}

CellVariant parse_cell_variant(const std::string& name) {
  if (name == "standard") return CellVariant::standard;
  if (name == "squashed") return CellVariant::squashed;
  throw ConfigError("unknown cell variant '" + name + "' (expected standard or squashed)");
}

void ExpertSpec::validate() const {
  if (hidden_dim == 0) throw ConfigError("ExpertSpec: hidden_dim must be >= 1");
  if (output_dim != 1)
    throw ConfigError("ExpertSpec: output_dim " + std::to_string(output_dim) +
                      " unsupported; only binary targets with one sigmoid output are implemented");
}

LstmExpert::LstmExpert(const ExpertSpec& spec, std::size_t input_dim, std::uint64_t seed)
    : spec_(spec), input_dim_(input_dim), params_(seed) {
  spec.validate();
  if (input_dim == 0) throw ConfigError("LstmExpert: input_dim must be >= 1");
  const std::size_t h = spec.hidden_dim, d = input_dim;
  for (const char* gate : {"i", "f", "o", "c"}) {
    params_.add(std::string("W_") + gate + "x", {h, d}, Init::glorot_uniform);
    params_.add(std::string("W_") + gate + "h", {h, h}, Init::glorot_uniform);
    params_.add(std::string("b_") + gate, {h}, Init::zeros);
  }
  params_.add("head_W", {1, h}, Init::glorot_uniform);
  params_.add("head_b", {1}, Init::zeros);
  bind();
}

LstmExpert::LstmExpert(const LstmExpert& other)
    : spec_(other.spec_), input_dim_(other.input_dim_), params_(other.params_) {
  bind();
}

LstmExpert& LstmExpert::operator=(const LstmExpert& other) {
  if (this != &other) {
    spec_ = other.spec_;
    input_dim_ = other.input_dim_;
    params_ = other.params_;
    bind();
  }
  return *this;
}

void LstmExpert::bind() {
  w_ix_ = params_.at("W_ix");
  w_ih_ = params_.at("W_ih");
  w_fx_ = params_.at("W_fx");
  w_fh_ = params_.at("W_fh");
  w_ox_ = params_.at("W_ox");
  w_oh_ = params_.at("W_oh");
  w_cx_ = params_.at("W_cx");
  w_ch_ = params_.at("W_ch");
  b_i_ = params_.at("b_i");
  b_f_ = params_.at("b_f");
  b_o_ = params_.at("b_o");
  b_c_ = params_.at("b_c");
  head_w_ = params_.at("head_W");
  head_b_ = params_.at("head_b");
}

LstmState LstmExpert::initial_state(std::size_t batch) const {
  const Shape shape = batch == 0 ? Shape{spec_.hidden_dim} : Shape{batch, spec_.hidden_dim};
  LstmState s;
  s.h = Tensor::zeros(shape);
  s.C = Tensor::zeros(shape);
  return s;
}

LstmState LstmExpert::step(const Tensor& x, const LstmState& prev) const {
  if (x.rank() == 0 || x.shape().back() != input_dim_)
    throw ConfigError("LstmExpert::step: input " + shape_string(x.shape()) + " does not end in d=" +
                      std::to_string(input_dim_));
  if (prev.h.shape().back() != spec_.hidden_dim || prev.h.rank() != x.rank())
    throw ConfigError("LstmExpert::step: state " + shape_string(prev.h.shape()) + " does not match input " +
                      shape_string(x.shape()) + " and hidden_dim " + std::to_string(spec_.hidden_dim));
  const auto pre = [&](const Tensor& wx, const Tensor& wh, const Tensor& b) {
    return add(add(matmul_nt(x, wx), matmul_nt(prev.h, wh)), b);
  };
  LstmState s;
  s.i = sigmoid(pre(w_ix_, w_ih_, b_i_));
  s.f = sigmoid(pre(w_fx_, w_fh_, b_f_));
  s.o = sigmoid(pre(w_ox_, w_oh_, b_o_));
  s.c_tilde = tanh(pre(w_cx_, w_ch_, b_c_));
  const Tensor cell = add(mul(s.f, prev.C), mul(s.i, s.c_tilde));
  s.C = spec_.cell_variant == CellVariant::squashed ? sigmoid(cell) : cell;
  s.h = mul(tanh(s.C), s.o);
  return s;
}

Tensor LstmExpert::head(const Tensor& h) const {
  const Tensor z = add(matmul_nt(h, head_w_), head_b_);
  Shape out(z.shape().begin(), z.shape().end() - 1);
  return sigmoid(reshape(z, out));
}

std::vector<Tensor> LstmExpert::forward(std::span<const Tensor> inputs) const {
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  if (inputs.empty()) return out;
  const std::size_t batch = inputs[0].rank() >= 2 ? inputs[0].dim(0) : 0;
  auto state = initial_state(batch);
  for (const auto& x : inputs) {
    state = step(x, state);
    out.push_back(head(state.h));
  }
  return out;
}

Series predict(const LstmExpert& expert, std::span<const data::SequenceInstance> split,
               std::size_t batch_size) {
  NoGradGuard no_grad;
  if (split.empty()) return {};
  Series out(split.size(), split[0].steps);
  for (std::size_t start = 0; start < split.size(); start += batch_size) {
    const std::size_t end = std::min(split.size(), start + batch_size);
    const auto batch = make_batch(split.subspan(start, end - start));
    const auto probs = expert.forward(batch);
    for (std::size_t t = 0; t < probs.size(); ++t)
      for (std::size_t r = 0; r < batch.size; ++r) out.at(start + r, t) = probs[t].value(r);
  }
  return out;
}

}  // namespace maeslab::seq
