// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/baselines/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "maeslab/diffcore/adam.hpp"
#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"
#include "maeslab/log.hpp"
#include "maeslab/seeding.hpp"
#include "maeslab/seqmodels/loss.hpp"

namespace maeslab::baselines {

using diff::Tensor;

std::vector<Series> ModelPool::validation_predictions() const {
  std::vector<Series> out;
  for (const auto& m : members) out.push_back(m.validation_predictions);
  return out;
}

std::size_t ModelPool::best_member() const {
  if (members.empty()) throw UsageError("best_member: empty pool");
  std::size_t best = 0;
  for (std::size_t m = 1; m < members.size(); ++m)
    if (members[m].history.best_validation_apr > members[best].history.best_validation_apr) best = m;
  return best;
}

ModelPool train_pool(std::span<const seq::ExpertSpec> specs, const data::Dataset& dataset,
                     const seq::FitOptions& options, std::uint64_t seed, std::size_t threads) {
  if (specs.empty()) throw ConfigError("train_pool: no member specs");
  if (dataset.validation.empty()) throw ConfigError("train_pool: pool members need a validation split");
  std::vector<std::optional<PoolMember>> slots(specs.size());
  const auto val_labels = data::label_matrix(dataset.validation);

  const auto train_one = [&](std::size_t m) {
    const std::uint64_t init_seed = mix_seed(seed, 2 * m);
    const std::uint64_t fit_seed = mix_seed(seed, 2 * m + 1);
    seq::LstmExpert model(specs[m], dataset.config.feature_dim, init_seed);
    auto opts = options;
    opts.seed = fit_seed;
    auto history = seq::train_expert(model, dataset, opts);
    auto val = seq::predict(model, dataset.validation);
    auto step_loss = seq::stepwise_bce(val, val_labels);
    slots[m] = PoolMember{specs[m], init_seed, fit_seed, std::move(model), std::move(history), std::move(val),
                          std::move(step_loss)};
    log::info("pool member " + std::to_string(m) + " (h=" + std::to_string(specs[m].hidden_dim) +
              ") best val APR " + std::to_string(slots[m]->history.best_validation_apr));
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, specs.size());
  if (workers == 1) {
    for (std::size_t m = 0; m < specs.size(); ++m) train_one(m);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t m = next++; m < specs.size(); m = next++) {
          try {
            train_one(m);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  ModelPool pool;
  for (auto& s : slots) pool.members.push_back(std::move(*s));
  return pool;
}

std::vector<Series> predict_all(const ModelPool& pool, std::span<const data::SequenceInstance> split) {
  std::vector<Series> out;
  out.reserve(pool.size());
  for (const auto& m : pool.members) out.push_back(seq::predict(m.model, split));
  return out;
}

std::vector<std::size_t> stepwise_select(std::span<const std::vector<double>> step_losses) {
  if (step_losses.empty()) throw UsageError("stepwise_select: empty pool");
  const std::size_t steps = step_losses[0].size();
  std::vector<std::size_t> out(steps, 0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t m = 1; m < step_losses.size(); ++m) {
      if (step_losses[m].size() != steps) throw ConfigError("stepwise_select: members have different step counts");
      if (step_losses[m][t] < step_losses[out[t]][t]) out[t] = m;
    }
  }
  return out;
}

std::vector<std::size_t> stepwise_select(const ModelPool& pool) {
  std::vector<std::vector<double>> losses;
  for (const auto& m : pool.members) losses.push_back(m.validation_step_loss);
  return stepwise_select(losses);
}

namespace {

void require_members(std::span<const Series> preds, const char* what) {
  if (preds.empty()) throw UsageError(std::string(what) + ": no member predictions");
  for (const auto& p : preds) require_same_shape(p, preds[0], what);
}

}  // namespace

Series selection_predict(std::span<const Series> member_predictions, std::span<const std::size_t> selection) {
  require_members(member_predictions, "selection_predict");
  Series out(member_predictions[0].rows, member_predictions[0].steps);
  if (selection.size() != out.steps) throw ConfigError("selection_predict: selection length differs from T");
  for (std::size_t t = 0; t < out.steps; ++t) {
    if (selection[t] >= member_predictions.size()) throw ConfigError("selection_predict: index out of range");
    for (std::size_t n = 0; n < out.rows; ++n) out.at(n, t) = member_predictions[selection[t]].at(n, t);
  }
  return out;
}

Series average_ensemble(std::span<const Series> member_predictions) {
  require_members(member_predictions, "average_ensemble");
  Series out(member_predictions[0].rows, member_predictions[0].steps);
  const double inv = 1.0 / static_cast<double>(member_predictions.size());
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    double s = 0.0;
    for (const auto& p : member_predictions) s += p.values[k];
    out.values[k] = s * inv;
  }
  return out;
}

std::string to_string(StackingMode mode) { return mode == StackingMode::global ? "global" : "stepwise"; }
std::string to_string(StackingParam param) { return param == StackingParam::convex ? "convex" : "unconstrained"; }

std::span<const double> StackingWeights::row_for_step(std::size_t t) const {
  const std::size_t r = mode == StackingMode::global ? 0 : t;
  if (r >= rows) throw ConfigError("StackingWeights: step " + std::to_string(t) + " out of range");
  return std::span<const double>(weights).subspan(r * members, members);
}

double StackingWeights::bias_for_step(std::size_t t) const {
  if (bias.empty()) return 0.0;
  return bias[mode == StackingMode::global ? 0 : t];
}

namespace {

// Fits one weight row on the given steps' predictions.
void fit_row(std::span<const Series> preds, const LabelMatrix& labels, std::span<const std::size_t> steps,
             const StackingOptions& opt, std::span<double> weights_out, double& bias_out) {
  const std::size_t m_count = preds.size(), n = labels.rows;
  std::vector<Tensor> inputs, targets;
  for (std::size_t t : steps) {
    std::vector<double> p(n * m_count), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < m_count; ++m) p[i * m_count + m] = preds[m].at(i, t);
      y[i] = labels.at(i, t);
    }
    inputs.push_back(Tensor::constant({n, m_count}, std::move(p)));
    targets.push_back(Tensor::constant({n}, std::move(y)));
  }

  const bool convex = opt.param == StackingParam::convex;
  Tensor w = Tensor::parameter({m_count}, std::vector<double>(m_count, convex ? 0.0 : 1.0 / double(m_count)));
  Tensor b = Tensor::parameter({}, {0.0});
  std::vector<Tensor> params{w};
  if (!convex) params.push_back(b);
  diff::AdamState adam(diff::AdamConfig{.learning_rate = opt.learning_rate});
  const auto combine = [&](const Tensor& p) {
    if (convex) return diff::sum_last(diff::mul(p, diff::softmax(w)));
    return diff::sigmoid(diff::add(diff::sum_last(diff::mul(p, w)), b));
  };
  for (std::size_t it = 0; it < opt.steps; ++it) {
    std::vector<Tensor> probs;
    for (const auto& p : inputs) probs.push_back(combine(p));
    const Tensor loss = seq::bce_loss(probs, targets);
    if (!std::isfinite(loss.item())) throw TrainingError("fit_stacking: non-finite loss at step " + std::to_string(it));
    loss.backward();
    diff::adam_step(params, adam);
  }
  if (convex) {
    const auto sw = diff::softmax(w);
    std::copy(sw.values().begin(), sw.values().end(), weights_out.begin());
  } else {
    std::copy(w.values().begin(), w.values().end(), weights_out.begin());
    bias_out = b.item();
  }
}

}  // namespace

StackingWeights fit_stacking(std::span<const Series> validation_predictions, const LabelMatrix& validation_labels,
                             StackingMode mode, const StackingOptions& options) {
  require_members(validation_predictions, "fit_stacking");
  require_same_shape(validation_predictions[0], validation_labels, "fit_stacking");
  if (validation_labels.rows == 0) throw UsageError("fit_stacking: empty validation predictions");
  StackingWeights sw;
  sw.mode = mode;
  sw.param = options.param;
  sw.members = validation_predictions.size();
  sw.rows = mode == StackingMode::global ? 1 : validation_labels.steps;
  sw.weights.assign(sw.rows * sw.members, 0.0);
  if (options.param == StackingParam::unconstrained) sw.bias.assign(sw.rows, 0.0);
  double unused = 0.0;
  for (std::size_t r = 0; r < sw.rows; ++r) {
    std::vector<std::size_t> steps;
    if (mode == StackingMode::global) {
      for (std::size_t t = 0; t < validation_labels.steps; ++t) steps.push_back(t);
    } else {
      steps.push_back(r);
    }
    fit_row(validation_predictions, validation_labels, steps, options,
            std::span<double>(sw.weights).subspan(r * sw.members, sw.members), sw.bias.empty() ? unused : sw.bias[r]);
  }
  return sw;
}

Series stacked_predict(std::span<const Series> member_predictions, const StackingWeights& weights) {
  require_members(member_predictions, "stacked_predict");
  if (member_predictions.size() != weights.members)
    throw ConfigError("stacked_predict: " + std::to_string(member_predictions.size()) + " members but weights for " +
                      std::to_string(weights.members));
  Series out(member_predictions[0].rows, member_predictions[0].steps);
  for (std::size_t t = 0; t < out.steps; ++t) {
    const auto w = weights.row_for_step(t);
    const double b = weights.bias_for_step(t);
    for (std::size_t n = 0; n < out.rows; ++n) {
      double s = 0.0;
      for (std::size_t m = 0; m < weights.members; ++m) s += w[m] * member_predictions[m].at(n, t);
      out.at(n, t) = weights.param == StackingParam::convex ? s : 1.0 / (1.0 + std::exp(-(s + b)));
    }
  }
  return out;
}

}  // namespace maeslab::baselines
