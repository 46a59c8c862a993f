// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "maeslab/errors.hpp"

namespace maeslab {

/// Row-major (sequence, step) matrix.
template <typename T>
struct StepMatrix {
  std::size_t rows = 0;
  std::size_t steps = 0;
  std::vector<T> values;

  StepMatrix() = default;
  StepMatrix(std::size_t n, std::size_t t, T fill = T{}) : rows(n), steps(t), values(n * t, fill) {}

  T& at(std::size_t n, std::size_t t) { return values[n * steps + t]; }
  const T& at(std::size_t n, std::size_t t) const { return values[n * steps + t]; }

  std::vector<T> column(std::size_t t) const {
    std::vector<T> out(rows);
    for (std::size_t n = 0; n < rows; ++n) out[n] = at(n, t);
    return out;
  }

  bool same_shape(const auto& other) const { return rows == other.rows && steps == other.steps; }
};

/// Class-1 probabilities per (sequence, step).
using Series = StepMatrix<double>;
/// Binary labels per (sequence, step).
using LabelMatrix = StepMatrix<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ConfigError(std::string(what) + ": shape " + std::to_string(a.rows) + "x" + std::to_string(a.steps) +
                      " does not match " + std::to_string(b.rows) + "x" + std::to_string(b.steps));
  }
}

}  // namespace maeslab
