// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/datagen/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "maeslab/errors.hpp"
#include "maeslab/log.hpp"
#include "maeslab/seeding.hpp"

namespace maeslab::data {

namespace {

constexpr std::uint64_t kWeightStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kTestStream = 3;
constexpr std::uint64_t kLabelStream = 4;

// Balance tolerance for quantile labels.
constexpr double kRatioTolerance = 0.01;

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

std::vector<SequenceInstance> sample_features(const ShiftConfig& c, std::size_t count,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<SequenceInstance> out(count);
  for (auto& seq : out) {
    seq.steps = c.steps;
    seq.feature_dim = c.feature_dim;
    seq.x.resize(c.steps * c.feature_dim);
    seq.y.assign(c.steps, 0);
    for (auto& v : seq.x) {
      const bool keep = unit(rng) < c.sparsity;
      const double z = normal(rng);
      v = keep ? z : 0.0;
    }
  }
  return out;
}

std::string describe(const ShiftConfig& c) {
  std::ostringstream os;
  os << "delta=" << c.delta << " d=" << c.feature_dim << " l=" << c.window << " T=" << c.steps
     << " sparsity=" << c.sparsity << " r=" << c.positive_ratio << " seed=" << c.seed;
  return os.str();
}

LabelCalibration label_by_quantile(std::vector<SequenceInstance>& split, const ShiftWeights& w,
                                   const ShiftConfig& c, const char* name) {
  std::vector<std::vector<double>> scores;
  scores.reserve(split.size());
  std::vector<double> all;
  for (const auto& seq : split) {
    scores.push_back(raw_scores(seq, w));
    all.insert(all.end(), scores.back().begin(), scores.back().end());
  }
  const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
  if (*lo == *hi) {
    throw GenerationError(std::string("generate_dataset: all raw scores in the ") + name +
                          " split equal " + std::to_string(*lo) + ", cannot place a quantile threshold (" +
                          describe(c) + ")");
  }
  // Positives are the scores strictly above the (k+1)-th largest value.
  const auto target = static_cast<std::size_t>(std::llround(c.positive_ratio * static_cast<double>(all.size())));
  std::sort(all.begin(), all.end(), std::greater<>());
  const double threshold = all[std::min(target, all.size() - 1)];

  std::size_t positives = 0;
  for (std::size_t n = 0; n < split.size(); ++n) {
    for (std::size_t t = 0; t < c.steps; ++t) {
      split[n].y[t] = scores[n][t] > threshold ? 1 : 0;
      positives += split[n].y[t];
    }
  }
  const double ratio = static_cast<double>(positives) / static_cast<double>(all.size());
  if (std::abs(ratio - c.positive_ratio) > kRatioTolerance) {
    throw GenerationError(std::string("generate_dataset: ") + name + " split positive ratio " +
                          std::to_string(ratio) + " is more than " + std::to_string(kRatioTolerance) +
                          " from r; too many tied raw scores at threshold " + std::to_string(threshold) +
                          " (" + describe(c) + ")");
  }
  return {LabelMode::quantile_threshold, threshold};
}

LabelCalibration label_by_sampling(std::vector<SequenceInstance>& split, const ShiftWeights& w,
                                   const ShiftConfig& c, std::uint64_t seed, const char* name) {
  std::vector<std::vector<double>> scores;
  for (const auto& seq : split) scores.push_back(raw_scores(seq, w));
  const auto mean_prob = [&](double bias) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& row : scores)
      for (double s : row) {
        total += sigmoid(s + bias);
        ++count;
      }
    return total / static_cast<double>(count);
  };
  double a = -50.0, b = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    (mean_prob(m) < c.positive_ratio ? a : b) = m;
  }
  const double bias = 0.5 * (a + b);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t positives = 0, total = 0;
  for (std::size_t n = 0; n < split.size(); ++n) {
    for (std::size_t t = 0; t < c.steps; ++t) {
      split[n].y[t] = unit(rng) < sigmoid(scores[n][t] + bias) ? 1 : 0;
      positives += split[n].y[t];
      ++total;
    }
  }
  const double ratio = static_cast<double>(positives) / static_cast<double>(total);
  if (std::abs(ratio - c.positive_ratio) > kRatioTolerance) {
    log::warn(std::string("generate_dataset: sampled ") + name + " split positive ratio " +
              std::to_string(ratio) + " differs from r by more than " + std::to_string(kRatioTolerance));
  }
  return {LabelMode::bernoulli, bias};
}

LabelCalibration label_split(std::vector<SequenceInstance>& split, const ShiftWeights& w,
                             const ShiftConfig& c, std::uint64_t stream, const char* name) {
  if (c.label_mode == LabelMode::quantile_threshold) return label_by_quantile(split, w, c, name);
  return label_by_sampling(split, w, c, mix_seed(c.seed, kLabelStream * 16 + stream), name);
}

}  // namespace

std::string to_string(LabelMode mode) {
  return mode == LabelMode::quantile_threshold ? "quantile" : "bernoulli";
}

LabelMode parse_label_mode(const std::string& name) {
  if (name == "quantile") return LabelMode::quantile_threshold;
  if (name == "bernoulli") return LabelMode::bernoulli;
  throw ConfigError("unknown label mode '" + name + "' (expected quantile or bernoulli)");
}

void ShiftConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError("ShiftConfig: " + msg); };
  if (!(delta >= 0.0) || !std::isfinite(delta)) fail("delta must be finite and >= 0, got " + std::to_string(delta));
  if (feature_dim == 0) fail("feature_dim must be positive");
  if (window == 0) fail("window must be positive");
  if (steps == 0) fail("steps must be positive");
  if (window > steps) fail("window " + std::to_string(window) + " exceeds steps " + std::to_string(steps));
  if (!(positive_ratio > 0.0 && positive_ratio < 1.0))
    fail("positive_ratio must lie in (0, 1), got " + std::to_string(positive_ratio));
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) fail("sparsity must lie in [0, 1], got " + std::to_string(sparsity));
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    fail("validation_fraction must lie in [0, 1), got " + std::to_string(validation_fraction));
  if (n_train == 0 || n_test == 0) fail("n_train and n_test must be positive");
  if (n_train - n_validation() == 0) fail("no training sequences left after the validation split");
}

std::size_t ShiftConfig::n_validation() const {
  return static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n_train)));
}

ShiftWeights generate_shift_weights(const ShiftConfig& config) {
  config.validate();
  ShiftWeights w;
  w.steps = config.steps;
  w.window = config.window;
  w.feature_dim = config.feature_dim;
  w.window_weights.resize(config.steps * config.window);
  w.feature_weights.resize(config.steps * config.feature_dim);

  std::mt19937_64 rng(mix_seed(config.seed, kWeightStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  // Increments are delta * U(-1, 1) so grids over delta share the same walk shape.
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t k = 0; k < config.window; ++k) w.window_weights[k] = normal(rng);
  for (std::size_t j = 0; j < config.feature_dim; ++j) w.feature_weights[j] = normal(rng);
  for (std::size_t t = 1; t < config.steps; ++t) {
    for (std::size_t k = 0; k < config.window; ++k)
      w.window_weights[t * config.window + k] =
          w.window_weights[(t - 1) * config.window + k] + config.delta * unit(rng);
    for (std::size_t j = 0; j < config.feature_dim; ++j)
      w.feature_weights[t * config.feature_dim + j] =
          w.feature_weights[(t - 1) * config.feature_dim + j] + config.delta * unit(rng);
  }
  return w;
}

double raw_score(const SequenceInstance& seq, const ShiftWeights& weights, std::size_t t) {
  if (seq.feature_dim != weights.feature_dim || t >= weights.steps || t >= seq.steps) {
    throw ConfigError("raw_score: sequence (T=" + std::to_string(seq.steps) + ", d=" +
                      std::to_string(seq.feature_dim) + ") does not match weights (T=" +
                      std::to_string(weights.steps) + ", d=" + std::to_string(weights.feature_dim) +
                      ") at step " + std::to_string(t));
  }
  const auto wl = weights.window_at(t);
  const auto wd = weights.feature_at(t);
  // window slot k holds x_{t-l+k}; slots before the sequence start are zero
  double s = 0.0;
  for (std::size_t k = 0; k < weights.window; ++k) {
    const std::size_t back = weights.window - k;
    if (back > t) continue;
    const std::size_t row = t - back;
    double proj = 0.0;
    for (std::size_t j = 0; j < seq.feature_dim; ++j) proj += seq.feature(row, j) * wd[j];
    s += wl[k] * proj;
  }
  return s;
}

std::vector<double> raw_scores(const SequenceInstance& seq, const ShiftWeights& weights) {
  std::vector<double> out(seq.steps);
  for (std::size_t t = 0; t < seq.steps; ++t) out[t] = raw_score(seq, weights, t);
  return out;
}

std::vector<std::uint8_t> threshold_labels(const SequenceInstance& seq, const ShiftWeights& weights,
                                           double threshold) {
  std::vector<std::uint8_t> y(seq.steps);
  for (std::size_t t = 0; t < seq.steps; ++t) y[t] = raw_score(seq, weights, t) > threshold ? 1 : 0;
  return y;
}

Dataset generate_dataset(const ShiftConfig& config) {
  config.validate();
  Dataset ds;
  ds.config = config;
  ds.weights = generate_shift_weights(config);

  auto pool = sample_features(config, config.n_train, mix_seed(config.seed, kTrainStream));
  const std::size_t n_val = config.n_validation();
  ds.validation.assign(std::make_move_iterator(pool.end() - static_cast<std::ptrdiff_t>(n_val)),
                       std::make_move_iterator(pool.end()));
  pool.resize(pool.size() - n_val);
  ds.train = std::move(pool);
  ds.test = sample_features(config, config.n_test, mix_seed(config.seed, kTestStream));

  ds.train_calibration = label_split(ds.train, ds.weights, config, 0, "train");
  if (!ds.validation.empty())
    ds.validation_calibration = label_split(ds.validation, ds.weights, config, 1, "validation");
  ds.test_calibration = label_split(ds.test, ds.weights, config, 2, "test");
  return ds;
}

LabelMatrix label_matrix(std::span<const SequenceInstance> split) {
  LabelMatrix m;
  m.rows = split.size();
  m.steps = split.empty() ? 0 : split[0].steps;
  m.values.reserve(m.rows * m.steps);
  for (const auto& seq : split) {
    if (seq.steps != m.steps) throw ConfigError("label_matrix: sequences have unequal lengths");
    m.values.insert(m.values.end(), seq.y.begin(), seq.y.end());
  }
  return m;
}

double positive_ratio(std::span<const SequenceInstance> split) {
  std::size_t pos = 0, total = 0;
  for (const auto& seq : split) {
    pos += static_cast<std::size_t>(std::count(seq.y.begin(), seq.y.end(), std::uint8_t{1}));
    total += seq.y.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(pos) / static_cast<double>(total);
}

double max_weight_increment(const ShiftWeights& weights) {
  double worst = 0.0;
  for (std::size_t t = 1; t < weights.steps; ++t) {
    for (std::size_t k = 0; k < weights.window; ++k)
      worst = std::max(worst, std::abs(weights.window_weights[t * weights.window + k] -
                                       weights.window_weights[(t - 1) * weights.window + k]));
    for (std::size_t j = 0; j < weights.feature_dim; ++j)
      worst = std::max(worst, std::abs(weights.feature_weights[t * weights.feature_dim + j] -
                                       weights.feature_weights[(t - 1) * weights.feature_dim + j]));
  }
  return worst;
}

const std::vector<double>& default_delta_grid() {
  static const std::vector<double> grid{0.0, 0.01, 0.025, 0.05, 0.075, 0.1, 0.2, 0.3, 0.4};
  return grid;
}

}  // namespace maeslab::data
