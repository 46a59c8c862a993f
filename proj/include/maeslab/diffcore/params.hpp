// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "maeslab/diffcore/tensor.hpp"
#include "maeslab/seeding.hpp"

namespace maeslab::diff {

enum class Init {
  /// Uniform(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))). For a
  /// [rows, cols] matrix the fans are cols and rows; a [n] vector uses n and 1.
  glorot_uniform,
  zeros,
};

/// Ordered, uniquely named parameter tensors drawn from one seeded stream.
/// Copying a ParamSet copies the values, not the handles.
class ParamSet {
 public:
  explicit ParamSet(std::uint64_t seed = 0);
  ParamSet(const ParamSet& other);
  ParamSet& operator=(const ParamSet& other);
  ParamSet(ParamSet&&) noexcept = default;
  ParamSet& operator=(ParamSet&&) noexcept = default;
  ~ParamSet() = default;

  Tensor add(const std::string& name, Shape shape, Init init);

  /// Redraws every parameter in insertion order from the original seed.
  void reinitialize();

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  const std::string& name(std::size_t i) const { return entries_.at(i).name; }
  const Tensor& tensor(std::size_t i) const { return entries_.at(i).tensor; }
  std::vector<Tensor> tensors() const;
  std::size_t parameter_count() const;

  void zero_grad();

  using Snapshot = std::vector<std::vector<double>>;
  Snapshot snapshot() const;
  void restore(const Snapshot& snapshot);

 private:
  struct Entry {
    std::string name;
    Tensor tensor;
    Init init;
  };
  void draw(Entry& entry);

  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<Entry> entries_;
};

using maeslab::mix_seed;

}  // namespace maeslab::diff
