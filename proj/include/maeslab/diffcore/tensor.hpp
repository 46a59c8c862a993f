// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace maeslab::diff {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulated into
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward;

  void ensure_grad();
};

}  // namespace detail

/// Handle to a dense row-major array of doubles that may take part in a
/// reverse-mode graph. Copies share the same storage; use clone() for a deep
/// copy. Ops build the graph implicitly through parent links, so graphs built
/// on different threads never share state.
class Tensor {
 public:
  using BackwardFn = std::function<void(detail::Node&)>;

  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor parameter(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  /// Result of an op. Parents are only recorded when one of them requires
  /// grad, so constant subgraphs are never kept alive.
  static Tensor from_op(Shape shape, std::vector<double> values,
                        std::vector<Tensor> parents, BackwardFn backward);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double value(std::size_t i) const { return values()[i]; }
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Reverse-mode sweep from a scalar. Leaf grads accumulate across calls.
  void backward() const;

  Tensor detach() const;
  Tensor clone() const;

  detail::Node& node() const;
  const std::shared_ptr<detail::Node>& node_ptr() const noexcept { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on the current thread while alive. Ops still
/// compute values; their results never require grad.
class NoGradGuard {
 public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

bool grad_enabled() noexcept;

}  // namespace maeslab::diff
