// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "maeslab/diffcore/tensor.hpp"

// Differentiable ops over Tensor.
//
// Broadcasting is leading-batch only: for binary elementwise ops one operand's
// shape must equal the other's or be a suffix of it (a [h] bias added to a
// [B, h] activation, a [] scalar against anything). Matmul likewise treats
// every leading axis of the left operand as a batch of rows. Reductions and
// normalizations act on the last axis unless stated otherwise. Any other shape
// combination throws ConfigError naming both shapes.

namespace maeslab::diff {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

/// scale * a + shift
Tensor affine(const Tensor& a, double scale, double shift);
inline Tensor neg(const Tensor& a) { return affine(a, -1.0, 0.0); }
inline Tensor one_minus(const Tensor& a) { return affine(a, -1.0, 1.0); }

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
/// Gradient passes only where lo < a < hi.
Tensor clamp(const Tensor& a, double lo, double hi);

/// a[..., k] x b[k, m] -> [..., m]
Tensor matmul(const Tensor& a, const Tensor& b);
/// a[..., k] x b[m, k]^T -> [..., m]
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);
/// Reduces the last axis.
Tensor logsumexp(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Reduces the last axis.
Tensor sum_last(const Tensor& a);
/// Reduces every axis except the last: [..., k] -> [k].
Tensor sum_leading(const Tensor& a);

/// Concatenates along the last axis; leading shapes must agree.
Tensor concat(std::span<const Tensor> parts);
/// Columns [begin, end) of the last axis.
Tensor slice(const Tensor& a, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& a, Shape shape);
/// [..., k] -> [..., count, k]
Tensor repeat_middle(const Tensor& a, std::size_t count);
/// [...] -> [count, ...]
Tensor broadcast_leading(const Tensor& a, std::size_t count);

enum class OpKind {
  add,
  sub,
  mul,
  affine,
  sigmoid,
  tanh,
  exp,
  log,
  clamp,
  matmul,
  matmul_nt,
  transpose,
  softmax,
  log_softmax,
  logsumexp,
  sum,
  mean,
  sum_last,
  sum_leading,
  concat,
  slice,
  reshape,
  repeat_middle,
  broadcast_leading,
};

std::string_view op_name(OpKind kind) noexcept;
const std::vector<OpKind>& all_op_kinds();

/// Extra arguments for the op kinds that take them; ignored by the rest.
struct OpAttributes {
  double scale = 1.0;
  double shift = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t count = 1;
  Shape shape;
};

/// Runtime dispatch over the op set, used by the gradient-check suites.
Tensor forward_op(OpKind kind, std::span<const Tensor> inputs, const OpAttributes& attrs = {});

}  // namespace maeslab::diff
