// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "maeslab/series.hpp"

namespace maeslab::metrics {

/// Step-interpolated average precision, AP = sum_k (R_k - R_{k-1}) * P_k,
/// with one PR point per distinct score (a group of tied scores crosses the
/// threshold together, so ordering inside a tie never matters). Returns
/// nullopt when there is no positive label, where AP is undefined.
std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> labels);

struct MetricsReport {
  /// AP per evaluated step; steps without positives are left out.
  std::vector<double> per_step_apr;
  /// Step index of each entry in per_step_apr.
  std::vector<std::size_t> steps;
  std::vector<std::size_t> skipped_steps;
  double mean_apr = 0.0;
  /// Population standard deviation across steps.
  double std_apr = 0.0;
};

/// AP over the N sequences at every step, then mean and std across steps.
/// Steps with no positive label are skipped, with a logged warning unless
/// `warn_skipped` is false (training loops evaluate every epoch).
MetricsReport stepwise_apr(const Series& predictions, const LabelMatrix& labels, bool warn_skipped = true);

inline constexpr std::size_t kDefaultPermutations = 10'000;

/// Paired sign-flip Monte Carlo test on per-step differences a_t - b_t with
/// the mean difference as statistic. Two-sided p = (1 + #{|perm| >= |obs|}) /
/// (1 + n_perm).
double permutation_test(std::span<const double> a, std::span<const double> b,
                        std::size_t n_perm = kDefaultPermutations, std::uint64_t seed = 0);

/// The p-value rule on its own, for a fixed set of null statistics.
double permutation_p_value(std::span<const double> null_statistics, double observed);

struct CorrelationMatrix {
  std::size_t size = 0;
  std::vector<double> values;  // row-major size x size
  /// Off-diagonal pairs where a model had zero variance; reported as 0.
  std::vector<std::pair<std::size_t, std::size_t>> undefined;

  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
  double mean_off_diagonal() const;
};

/// Pairwise Pearson correlation over all flattened (n, t) predictions.
CorrelationMatrix prediction_correlation(std::span<const Series> predictions);

double mean(std::span<const double> xs);
double population_std(std::span<const double> xs);
double sample_std(std::span<const double> xs);

}  // namespace maeslab::metrics
