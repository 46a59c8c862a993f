// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/gate/gate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"

namespace maeslab::gate {

using namespace diff;

std::string to_string(AttentionKind kind) {
  switch (kind) {
    case AttentionKind::additive: return "additive";
    case AttentionKind::concatenation: return "concatenation";
    case AttentionKind::dot: return "dot";
    case AttentionKind::general: return "general";
  }
  return "?";
}

AttentionKind parse_attention_kind(const std::string& name) {
  for (auto k : all_attention_kinds())
    if (to_string(k) == name) return k;
  throw ConfigError("unknown attention kind '" + name + "' (expected additive, concatenation, dot or general)");
}

const std::vector<AttentionKind>& all_attention_kinds() {
  static const std::vector<AttentionKind> kinds{AttentionKind::additive, AttentionKind::concatenation,
                                                AttentionKind::dot, AttentionKind::general};
  return kinds;
}

void GateSpec::validate() const {
  if (num_experts == 0) throw ConfigError("GateSpec: num_experts must be >= 1");
  if (context_dim == 0 || encoding_dim == 0) throw ConfigError("GateSpec: context and encoding dims must be >= 1");
  if ((kind == AttentionKind::additive || kind == AttentionKind::concatenation) && attention_dim == 0)
    throw ConfigError("GateSpec: attention_dim must be >= 1 for " + to_string(kind) + " attention");
  if (kind == AttentionKind::dot && encoding_dim != context_dim)
    throw ConfigError("GateSpec: dot attention needs encoding_dim == context_dim, got " +
                      std::to_string(encoding_dim) + " and " + std::to_string(context_dim));
}

AttentionGate::AttentionGate(const GateSpec& spec, std::uint64_t seed) : spec_(spec), params_(seed) {
  spec.validate();
  const std::size_t m = spec.num_experts, c = spec.context_dim, v = spec.encoding_dim, a = spec.attention_dim;
  params_.add("U", {m, v}, Init::glorot_uniform);
  switch (spec.kind) {
    case AttentionKind::additive:
      params_.add("W1", {a, c}, Init::glorot_uniform);
      params_.add("W2", {a, v}, Init::glorot_uniform);
      params_.add("v", {1, a}, Init::glorot_uniform);
      break;
    case AttentionKind::concatenation:
      params_.add("W", {a, c + v}, Init::glorot_uniform);
      params_.add("v", {1, a}, Init::glorot_uniform);
      break;
    case AttentionKind::dot:
      break;
    case AttentionKind::general:
      params_.add("W", {c, v}, Init::glorot_uniform);
      break;
  }
  bind();
}

AttentionGate::AttentionGate(const AttentionGate& other) : spec_(other.spec_), params_(other.params_) { bind(); }

AttentionGate& AttentionGate::operator=(const AttentionGate& other) {
  if (this != &other) {
    spec_ = other.spec_;
    params_ = other.params_;
    bind();
  }
  return *this;
}

void AttentionGate::bind() {
  const auto get = [&](const char* name) { return params_.contains(name) ? params_.at(name) : Tensor(); };
  u_ = get("U");
  w_ = get("W");
  w1_ = get("W1");
  w2_ = get("W2");
  v_ = get("v");
}

namespace {
Shape drop_last(const Shape& s) { return Shape(s.begin(), s.end() - 1); }
}  // namespace

Tensor AttentionGate::score(const Tensor& c, const Tensor& u) const {
  if (c.shape() != Shape{spec_.context_dim} || u.shape() != Shape{spec_.encoding_dim})
    throw ConfigError("AttentionGate::score: context " + shape_string(c.shape()) + " / encoding " +
                      shape_string(u.shape()) + " do not match c=" + std::to_string(spec_.context_dim) +
                      ", v=" + std::to_string(spec_.encoding_dim));
  switch (spec_.kind) {
    case AttentionKind::additive:
      return sum(matmul_nt(tanh(add(matmul_nt(c, w1_), matmul_nt(u, w2_))), v_));
    case AttentionKind::concatenation: {
      const Tensor parts[] = {c, u};
      return sum(matmul_nt(tanh(matmul_nt(concat(parts), w_)), v_));
    }
    case AttentionKind::dot:
      return sum(mul(c, u));
    case AttentionKind::general:
      return sum(mul(matmul(c, w_), u));
  }
  throw UsageError("unreachable attention kind");
}

Tensor AttentionGate::scores(const Tensor& context) const {
  if (context.rank() == 0 || context.rank() > 2 || context.shape().back() != spec_.context_dim)
    throw ConfigError("AttentionGate::scores: context " + shape_string(context.shape()) +
                      " must be [c] or [B, c] with c=" + std::to_string(spec_.context_dim));
  const std::size_t m = spec_.num_experts;
  const Shape out = [&] {
    Shape s = drop_last(context.shape());
    s.push_back(m);
    return s;
  }();
  switch (spec_.kind) {
    case AttentionKind::additive: {
      // [.., M, a] = W1 c (repeated per expert) + W2 u_m (broadcast per row)
      const Tensor hidden = tanh(add(repeat_middle(matmul_nt(context, w1_), m), matmul_nt(u_, w2_)));
      return reshape(matmul_nt(hidden, v_), out);
    }
    case AttentionKind::concatenation: {
      const Tensor keys = context.rank() == 2 ? broadcast_leading(u_, context.dim(0)) : u_;
      const Tensor parts[] = {repeat_middle(context, m), keys};
      const Tensor hidden = tanh(matmul_nt(concat(parts), w_));
      return reshape(matmul_nt(hidden, v_), out);
    }
    case AttentionKind::dot:
      return matmul_nt(context, u_);
    case AttentionKind::general:
      return matmul_nt(matmul(context, w_), u_);
  }
  throw UsageError("unreachable attention kind");
}

Tensor AttentionGate::weights(const Tensor& context) const { return softmax(scores(context)); }

std::vector<double> softmax_weights(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  const double mx = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += out[i] = std::exp(scores[i] - mx);
  for (auto& w : out) w /= total;
  return out;
}

std::size_t select_hard(std::span<const double> weights) {
  if (weights.empty()) throw ConfigError("select_hard: empty weight vector");
  // max_element returns the first maximum
  return static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
}

void require_simplex(std::span<const double> weights, double tol, const std::string& what) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw UsageError(what + ": negative or NaN weight " + std::to_string(w));
    total += w;
  }
  if (std::abs(total - 1.0) > tol)
    throw UsageError(what + ": weights sum to " + std::to_string(total) + ", not 1");
}

void GateWeights::validate(double tol) const {
  if (alpha.size() != rows * steps * experts) throw UsageError("GateWeights: storage does not match shape");
  for (std::size_t n = 0; n < rows; ++n)
    for (std::size_t t = 0; t < steps; ++t)
      require_simplex(slice(n, t), tol,
                      "GateWeights at sequence " + std::to_string(n) + " step " + std::to_string(t));
}

}  // namespace maeslab::gate
