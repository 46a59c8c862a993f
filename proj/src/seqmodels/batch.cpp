// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/seqmodels/batch.hpp"

#include <algorithm>
#include <numeric>

#include "maeslab/errors.hpp"

namespace maeslab::seq {

using diff::Tensor;

SequenceBatch make_batch(std::span<const data::SequenceInstance> split, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ConfigError("make_batch: empty batch");
  SequenceBatch b;
  b.size = rows.size();
  b.steps = split[rows[0]].steps;
  b.feature_dim = split[rows[0]].feature_dim;
  b.labels = LabelMatrix(b.size, b.steps);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& seq = split[rows[r]];
    if (seq.steps != b.steps || seq.feature_dim != b.feature_dim)
      throw ConfigError("make_batch: sequences differ in length or feature dimension");
    for (std::size_t t = 0; t < b.steps; ++t) b.labels.at(r, t) = seq.y[t];
  }
  b.inputs.reserve(b.steps);
  b.targets.reserve(b.steps);
  for (std::size_t t = 0; t < b.steps; ++t) {
    std::vector<double> x(b.size * b.feature_dim);
    std::vector<double> y(b.size);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& seq = split[rows[r]];
      std::copy_n(seq.x.begin() + static_cast<std::ptrdiff_t>(t * b.feature_dim), b.feature_dim,
                  x.begin() + static_cast<std::ptrdiff_t>(r * b.feature_dim));
      y[r] = seq.y[t];
    }
    b.inputs.push_back(Tensor::constant({b.size, b.feature_dim}, std::move(x)));
    b.targets.push_back(Tensor::constant({b.size}, std::move(y)));
  }
  return b;
}

SequenceBatch make_batch(std::span<const data::SequenceInstance> split) {
  std::vector<std::size_t> rows(split.size());
  std::iota(rows.begin(), rows.end(), 0);
  return make_batch(split, rows);
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size,
                                                       std::mt19937_64& rng) {
  if (batch_size == 0) throw ConfigError("shuffled_batches: batch_size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates on raw engine output keeps the order identical across
  // standard libraries.
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
  return out;
}

Series to_series(std::span<const Tensor> per_step) {
  if (per_step.empty()) return {};
  Series s(per_step[0].size(), per_step.size());
  for (std::size_t t = 0; t < per_step.size(); ++t) {
    if (per_step[t].size() != s.rows) throw ConfigError("to_series: steps have different batch sizes");
    for (std::size_t n = 0; n < s.rows; ++n) s.at(n, t) = per_step[t].value(n);
  }
  return s;
}

}  // namespace maeslab::seq
