// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maeslab/diffcore/params.hpp"

namespace maeslab::gate {

/// Content-based scoring functions f(u_m, c):
///   additive       v^T tanh(W1 c + W2 u)
///   concatenation  v^T tanh(W [c; u])
///   dot            c^T u
///   general        c^T W u
enum class AttentionKind { additive, concatenation, dot, general };

std::string to_string(AttentionKind kind);
AttentionKind parse_attention_kind(const std::string& name);
const std::vector<AttentionKind>& all_attention_kinds();

struct GateSpec {
  AttentionKind kind = AttentionKind::additive;
  std::size_t num_experts = 1;
  std::size_t context_dim = 16;
  std::size_t encoding_dim = 16;
  /// Hidden width of the additive and concatenation scorers.
  std::size_t attention_dim = 16;

  /// Dot attention requires encoding_dim == context_dim.
  void validate() const;
};

/// Expert encodings U [M, v] plus the scorer's parameters. Parameter names:
/// "U", and "W1", "W2", "v" (additive), "W", "v" (concatenation), "W"
/// (general). v is stored as [1, a]; W for general is [c, v].
class AttentionGate {
 public:
  AttentionGate(const GateSpec& spec, std::uint64_t seed);
  AttentionGate(const AttentionGate& other);
  AttentionGate& operator=(const AttentionGate& other);
  AttentionGate(AttentionGate&&) noexcept = default;
  AttentionGate& operator=(AttentionGate&&) noexcept = default;

  const GateSpec& spec() const noexcept { return spec_; }
  diff::ParamSet& params() noexcept { return params_; }
  const diff::ParamSet& params() const noexcept { return params_; }
  const diff::Tensor& encodings() const noexcept { return u_; }

  /// f(u, c) for one context [c] and one encoding [v]; returns a scalar.
  diff::Tensor score(const diff::Tensor& context, const diff::Tensor& encoding) const;
  /// Scores of every expert: context [B, c] -> [B, M] (or [c] -> [M]).
  diff::Tensor scores(const diff::Tensor& context) const;
  /// softmax(scores(context)) over experts.
  diff::Tensor weights(const diff::Tensor& context) const;

 private:
  GateSpec spec_;
  diff::ParamSet params_;
  diff::Tensor u_, w_, w1_, w2_, v_;

  void bind();
};

/// Max-subtracted softmax over a score vector.
std::vector<double> softmax_weights(std::span<const double> scores);

/// Argmax; ties go to the lowest index.
std::size_t select_hard(std::span<const double> weights);

/// Throws UsageError unless weights are nonnegative and sum to 1 within tol.
void require_simplex(std::span<const double> weights, double tol, const std::string& what);

inline constexpr double kSimplexTolerance = 1e-9;

/// alpha[n][t][m], row-major.
struct GateWeights {
  std::size_t rows = 0;
  std::size_t steps = 0;
  std::size_t experts = 0;
  std::vector<double> alpha;

  GateWeights() = default;
  GateWeights(std::size_t n, std::size_t t, std::size_t m) : rows(n), steps(t), experts(m), alpha(n * t * m, 0.0) {}

  double& at(std::size_t n, std::size_t t, std::size_t m) { return alpha[(n * steps + t) * experts + m]; }
  double at(std::size_t n, std::size_t t, std::size_t m) const { return alpha[(n * steps + t) * experts + m]; }
  std::span<const double> slice(std::size_t n, std::size_t t) const {
    return std::span<const double>(alpha).subspan((n * steps + t) * experts, experts);
  }
  /// Checks the simplex invariant on every (n, t).
  void validate(double tol = kSimplexTolerance) const;
};

}  // namespace maeslab::gate
