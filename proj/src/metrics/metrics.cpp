// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "maeslab/errors.hpp"
#include "maeslab/log.hpp"

namespace maeslab::metrics {

std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ConfigError("average_precision: " + std::to_string(scores.size()) + " scores but " +
                      std::to_string(labels.size()) + " labels");
  }
  const auto positives = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(),
                                                                [](std::uint8_t y) { return y != 0; }));
  if (positives == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    // consume the whole group of tied scores before emitting a PR point
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      tp += labels[order[i]] != 0;
      ++seen;
      ++i;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

MetricsReport stepwise_apr(const Series& predictions, const LabelMatrix& labels, bool warn_skipped) {
  require_same_shape(predictions, labels, "stepwise_apr");
  MetricsReport report;
  for (std::size_t t = 0; t < predictions.steps; ++t) {
    const auto scores = predictions.column(t);
    const auto ys = labels.column(t);
    if (auto ap = average_precision(scores, ys)) {
      report.per_step_apr.push_back(*ap);
      report.steps.push_back(t);
    } else {
      report.skipped_steps.push_back(t);
      if (warn_skipped) log::warn("stepwise_apr: no positive label at step " + std::to_string(t) + ", step skipped");
    }
  }
  report.mean_apr = mean(report.per_step_apr);
  report.std_apr = population_std(report.per_step_apr);
  return report;
}

double permutation_p_value(std::span<const double> null_statistics, double observed) {
  const double threshold = std::abs(observed);
  const double tol = 1e-12 * std::max(1.0, threshold);
  const auto extreme = std::count_if(null_statistics.begin(), null_statistics.end(),
                                     [&](double s) { return std::abs(s) >= threshold - tol; });
  return (1.0 + static_cast<double>(extreme)) / (1.0 + static_cast<double>(null_statistics.size()));
}

double permutation_test(std::span<const double> a, std::span<const double> b, std::size_t n_perm,
                        std::uint64_t seed) {
  if (a.size() != b.size() || a.empty()) {
    throw ConfigError("permutation_test: series must be non-empty and of equal length (" +
                      std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (n_perm == 0) throw ConfigError("permutation_test: n_perm must be positive");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  const double observed = mean(diff);

  std::mt19937_64 rng(seed);
  std::vector<double> null_stats(n_perm);
  for (std::size_t p = 0; p < n_perm; ++p) {
    double s = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) bits = rng();
      s += (bits & 1U) ? diff[i] : -diff[i];
      bits >>= 1U;
    }
    null_stats[p] = s / static_cast<double>(n);
  }
  return permutation_p_value(null_stats, observed);
}

double CorrelationMatrix::mean_off_diagonal() const {
  if (size < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = i + 1; j < size; ++j) total += at(i, j);
  return total / static_cast<double>(size * (size - 1) / 2);
}

CorrelationMatrix prediction_correlation(std::span<const Series> predictions) {
  CorrelationMatrix out;
  out.size = predictions.size();
  out.values.assign(out.size * out.size, 0.0);
  if (predictions.empty()) return out;

  const std::size_t len = predictions[0].values.size();
  std::vector<std::vector<double>> centered(out.size);
  std::vector<double> norms(out.size);
  for (std::size_t i = 0; i < out.size; ++i) {
    require_same_shape(predictions[i], predictions[0], "prediction_correlation");
    const auto& v = predictions[i].values;
    const double m = mean(v);
    centered[i].resize(len);
    double ss = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      centered[i][k] = v[k] - m;
      ss += centered[i][k] * centered[i][k];
    }
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    norms[i] = (len == 0 || *lo == *hi) ? 0.0 : std::sqrt(ss);
  }
  for (std::size_t i = 0; i < out.size; ++i) {
    out.values[i * out.size + i] = 1.0;
    for (std::size_t j = i + 1; j < out.size; ++j) {
      double r = 0.0;
      if (norms[i] == 0.0 || norms[j] == 0.0) {
        out.undefined.emplace_back(i, j);
        log::warn("prediction_correlation: model " + std::to_string(norms[i] == 0.0 ? i : j) +
                  " has constant predictions; correlation with model " +
                  std::to_string(norms[i] == 0.0 ? j : i) + " reported as 0");
      } else {
        double dot = 0.0;
        for (std::size_t k = 0; k < len; ++k) dot += centered[i][k] * centered[j][k];
        r = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
      }
      out.values[i * out.size + j] = r;
      out.values[j * out.size + i] = r;
    }
  }
  return out;
}

}  // namespace maeslab::metrics
