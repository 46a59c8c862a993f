// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maeslab/datagen/datagen.hpp"
#include "maeslab/seqmodels/lstm.hpp"
#include "maeslab/seqmodels/train.hpp"

namespace maeslab::baselines {

struct PoolMember {
  seq::ExpertSpec spec;
  std::uint64_t init_seed = 0;
  std::uint64_t fit_seed = 0;
  seq::LstmExpert model;
  seq::FitHistory history;
  Series validation_predictions;
  /// Mean validation BCE at each step.
  std::vector<double> validation_step_loss;
};

struct ModelPool {
  std::vector<PoolMember> members;

  std::size_t size() const noexcept { return members.size(); }
  std::vector<Series> validation_predictions() const;
  /// Index of the member with the best step-averaged validation APR (ties
  /// to the lowest index).
  std::size_t best_member() const;
};

/// Trains every spec independently with BCE. Member m uses seeds derived
/// from (seed, m) only, so results do not depend on `threads`.
ModelPool train_pool(std::span<const seq::ExpertSpec> specs, const data::Dataset& dataset,
                     const seq::FitOptions& options, std::uint64_t seed, std::size_t threads = 1);

/// Member predictions on a split, in pool order.
std::vector<Series> predict_all(const ModelPool& pool, std::span<const data::SequenceInstance> split);

/// Per step, the member with the lowest validation loss; ties to the lowest
/// index. step_losses[m][t].
std::vector<std::size_t> stepwise_select(std::span<const std::vector<double>> step_losses);
std::vector<std::size_t> stepwise_select(const ModelPool& pool);
/// Series taking member selection[t]'s prediction at each step.
Series selection_predict(std::span<const Series> member_predictions, std::span<const std::size_t> selection);

/// (1/M) sum_m p_m
Series average_ensemble(std::span<const Series> member_predictions);

enum class StackingMode { global, stepwise };
enum class StackingParam {
  /// Softmax-parametrized convex weights.
  convex,
  /// p = sigmoid(sum_m w_m p_m + b) with free w and b.
  unconstrained,
};

std::string to_string(StackingMode mode);
std::string to_string(StackingParam param);

struct StackingOptions {
  std::size_t steps = 1000;
  double learning_rate = 0.01;
  StackingParam param = StackingParam::convex;
};

/// weights is rows x members with rows = 1 (global) or T (stepwise). Under
/// the convex parametrization every row lies on the simplex.
struct StackingWeights {
  StackingMode mode = StackingMode::global;
  StackingParam param = StackingParam::convex;
  std::size_t rows = 0;
  std::size_t members = 0;
  std::vector<double> weights;
  std::vector<double> bias;  // per row, unconstrained only

  std::span<const double> row_for_step(std::size_t t) const;
  double bias_for_step(std::size_t t) const;
};

/// Full-batch Adam on the BCE of the combined validation predictions.
/// Throws UsageError when predictions are missing or mis-shaped.
StackingWeights fit_stacking(std::span<const Series> validation_predictions, const LabelMatrix& validation_labels,
                             StackingMode mode, const StackingOptions& options = {});

Series stacked_predict(std::span<const Series> member_predictions, const StackingWeights& weights);

}  // namespace maeslab::baselines
