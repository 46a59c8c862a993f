// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/diffcore/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "maeslab/errors.hpp"

namespace maeslab::diff {

std::size_t numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void detail::Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

namespace {

std::shared_ptr<detail::Node> make_node(Shape shape, std::vector<double> values,
                                        bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw ConfigError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (values.size() != numel(shape)) {
    throw ConfigError("tensor of shape " + shape_string(shape) + " needs " +
                      std::to_string(numel(shape)) + " values, got " +
                      std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(make_node(std::move(shape), std::move(values), false));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  auto node = make_node(std::move(shape), std::move(values), true);
  node->ensure_grad();
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = numel(shape);
  return constant(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

namespace {
thread_local bool t_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() noexcept : saved_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = saved_; }
bool grad_enabled() noexcept { return t_grad_enabled; }

Tensor Tensor::from_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                       BackwardFn backward) {
  const bool needs = t_grad_enabled && std::any_of(parents.begin(), parents.end(),
                                 [](const Tensor& p) { return p.requires_grad(); });
  auto node = make_node(std::move(shape), std::move(values), needs);
  if (needs) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

detail::Node& Tensor::node() const {
  if (!node_) throw UsageError("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return node().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ConfigError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::size() const { return node().value.size(); }

std::span<const double> Tensor::values() const { return node().value; }

std::span<double> Tensor::mutable_values() {
  auto& n = node();
  if (!n.parents.empty()) throw UsageError("cannot mutate the values of an op result");
  return n.value;
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item() on tensor of shape " + shape_string(shape()));
  return node().value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::has_grad() const { return node_ && node_->requires_grad && node_->grad.size() == node_->value.size(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw UsageError("tensor of shape " + shape_string(shape()) + " has no grad");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!requires_grad()) throw UsageError("tensor does not require grad");
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (requires_grad()) node_->grad.assign(node_->value.size(), 0.0);
}

void Tensor::backward() const {
  auto& root = node();
  if (root.value.size() != 1) {
    throw UsageError("backward() requires a scalar loss, got shape " + shape_string(root.shape));
  }
  if (!root.requires_grad) return;

  // Iterative post-order DFS gives a topological order with parents first.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{&root, 0}};
  visited.insert(&root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* n : order) {
    if (n->backward) n->grad.assign(n->value.size(), 0.0);
  }
  root.ensure_grad();
  root.grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

Tensor Tensor::detach() const {
  return constant(shape(), node().value);
}

Tensor Tensor::clone() const {
  auto& n = node();
  auto copy = requires_grad() ? parameter(n.shape, n.value) : constant(n.shape, n.value);
  if (requires_grad() && n.grad.size() == n.value.size()) copy.node_->grad = n.grad;
  return copy;
}

}  // namespace maeslab::diff
