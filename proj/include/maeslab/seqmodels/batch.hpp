// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "maeslab/datagen/datagen.hpp"
#include "maeslab/diffcore/tensor.hpp"
#include "maeslab/series.hpp"

namespace maeslab::seq {

/// Step-major view of a set of sequences: inputs[t] is [B, d] and
/// targets[t] is [B] of 0/1 constants.
struct SequenceBatch {
  std::size_t size = 0;
  std::size_t steps = 0;
  std::size_t feature_dim = 0;
  std::vector<diff::Tensor> inputs;
  std::vector<diff::Tensor> targets;
  LabelMatrix labels;
};

SequenceBatch make_batch(std::span<const data::SequenceInstance> split, std::span<const std::size_t> rows);
SequenceBatch make_batch(std::span<const data::SequenceInstance> split);

/// Row indices [0, n) shuffled and cut into chunks of batch_size (the last
/// chunk may be short).
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size,
                                                       std::mt19937_64& rng);

/// Stacks per-step [B] tensors into a B x T series.
Series to_series(std::span<const diff::Tensor> per_step);

}  // namespace maeslab::seq
