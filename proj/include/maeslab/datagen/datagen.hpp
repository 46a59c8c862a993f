// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maeslab/series.hpp"

namespace maeslab::data {

enum class LabelMode {
  /// Labels are 1 where the raw score exceeds the split's empirical
  /// (1 - positive_ratio) quantile.
  quantile_threshold,
  /// Labels are drawn from Bernoulli(sigmoid(score + bias)) with the bias
  /// solved so the mean probability equals positive_ratio.
  bernoulli,
};

std::string to_string(LabelMode mode);
LabelMode parse_label_mode(const std::string& name);

/// Generator settings. Labels at step t are driven by the bilinear form
/// w_window(t)^T [x_{t-l}, ..., x_{t-1}]^T w_feature(t) whose weights take
/// a Uniform(-delta, delta) random-walk step at every t.
struct ShiftConfig {
  double delta = 0.2;
  std::size_t feature_dim = 3;   // d
  std::size_t window = 10;       // l
  std::size_t steps = 48;        // T
  std::size_t n_train = 5000;    // split into train + validation
  std::size_t n_test = 1000;
  double positive_ratio = 0.25;  // r
  double sparsity = 0.5;         // probability that a feature entry is nonzero
  double validation_fraction = 0.2;
  LabelMode label_mode = LabelMode::quantile_threshold;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t n_validation() const;
};

/// Per-step generating weights, row-major: window_weights is T x l and
/// feature_weights is T x d.
struct ShiftWeights {
  std::size_t steps = 0;
  std::size_t window = 0;
  std::size_t feature_dim = 0;
  std::vector<double> window_weights;
  std::vector<double> feature_weights;

  std::span<const double> window_at(std::size_t t) const {
    return std::span<const double>(window_weights).subspan(t * window, window);
  }
  std::span<const double> feature_at(std::size_t t) const {
    return std::span<const double>(feature_weights).subspan(t * feature_dim, feature_dim);
  }
};

struct SequenceInstance {
  std::size_t steps = 0;
  std::size_t feature_dim = 0;
  std::vector<double> x;         // steps x feature_dim, row-major
  std::vector<std::uint8_t> y;   // steps
  std::vector<double> static_features;

  double feature(std::size_t t, std::size_t j) const { return x[t * feature_dim + j]; }
};

/// How a split's scores were turned into labels.
struct LabelCalibration {
  LabelMode mode = LabelMode::quantile_threshold;
  /// quantile_threshold: raw-score threshold; bernoulli: additive bias.
  double value = 0.0;
};

struct Dataset {
  ShiftConfig config;
  ShiftWeights weights;
  std::vector<SequenceInstance> train;
  std::vector<SequenceInstance> validation;
  std::vector<SequenceInstance> test;
  LabelCalibration train_calibration;
  LabelCalibration validation_calibration;
  LabelCalibration test_calibration;
  std::size_t n_classes = 2;
};

ShiftWeights generate_shift_weights(const ShiftConfig& config);

/// Raw (pre-sigmoid) score at step t; history before the first step is zero.
double raw_score(const SequenceInstance& seq, const ShiftWeights& weights, std::size_t t);
std::vector<double> raw_scores(const SequenceInstance& seq, const ShiftWeights& weights);

/// Re-derives labels for a sequence from its features and a threshold.
std::vector<std::uint8_t> threshold_labels(const SequenceInstance& seq, const ShiftWeights& weights,
                                           double threshold);

/// Throws GenerationError when the split's scores are degenerate.
Dataset generate_dataset(const ShiftConfig& config);

LabelMatrix label_matrix(std::span<const SequenceInstance> split);
double positive_ratio(std::span<const SequenceInstance> split);
/// max over t >= 1 of the largest absolute weight increment.
double max_weight_increment(const ShiftWeights& weights);

/// Full-scale shift grid.
const std::vector<double>& default_delta_grid();

}  // namespace maeslab::data
