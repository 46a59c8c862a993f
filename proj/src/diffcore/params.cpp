// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/diffcore/params.hpp"

#include <algorithm>
#include <cmath>

#include "maeslab/errors.hpp"

namespace maeslab::diff {

ParamSet::ParamSet(std::uint64_t seed) : seed_(seed), rng_(seed) {}

ParamSet::ParamSet(const ParamSet& other) : seed_(other.seed_), rng_(other.rng_) {
  entries_.reserve(other.entries_.size());
  for (const auto& e : other.entries_) entries_.push_back({e.name, e.tensor.clone(), e.init});
}

ParamSet& ParamSet::operator=(const ParamSet& other) {
  if (this != &other) {
    ParamSet copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void ParamSet::draw(Entry& entry) {
  auto values = entry.tensor.mutable_values();
  if (entry.init == Init::zeros) {
    std::fill(values.begin(), values.end(), 0.0);
    return;
  }
  const auto& shape = entry.tensor.shape();
  double fan_sum = 0.0;
  if (shape.size() == 2) {
    fan_sum = static_cast<double>(shape[0] + shape[1]);
  } else {
    fan_sum = static_cast<double>(numel(shape) + 1);
  }
  const double limit = std::sqrt(6.0 / fan_sum);
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : values) v = dist(rng_);
}

Tensor ParamSet::add(const std::string& name, Shape shape, Init init) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  const auto n = numel(shape);
  entries_.push_back({name, Tensor::parameter(std::move(shape), std::vector<double>(n, 0.0)), init});
  draw(entries_.back());
  return entries_.back().tensor;
}

void ParamSet::reinitialize() {
  rng_.seed(seed_);
  for (auto& e : entries_) {
    draw(e);
    e.tensor.zero_grad();
  }
}

bool ParamSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
}

const Tensor& ParamSet::at(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw UsageError("no parameter named '" + name + "'");
}

std::vector<Tensor> ParamSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.tensor);
  return out;
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

ParamSet::Snapshot ParamSet::snapshot() const {
  Snapshot out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.tensor.values().begin(), e.tensor.values().end());
  return out;
}

void ParamSet::restore(const Snapshot& snapshot) {
  if (snapshot.size() != entries_.size()) throw UsageError("snapshot does not match parameter set");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto dst = entries_[i].tensor.mutable_values();
    if (snapshot[i].size() != dst.size()) {
      throw UsageError("snapshot size mismatch for parameter '" + entries_[i].name + "'");
    }
    std::copy(snapshot[i].begin(), snapshot[i].end(), dst.begin());
  }
}

}  // namespace maeslab::diff
