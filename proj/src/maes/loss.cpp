// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/maes/loss.hpp"

#include <algorithm>
#include <cmath>

#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"
#include "maeslab/seqmodels/loss.hpp"

namespace maeslab::maes {

using namespace diff;

double maes_loss(std::span<const Series> expert_probs, const gate::GateWeights& alpha, const LabelMatrix& labels) {
  const std::size_t m_count = expert_probs.size();
  if (m_count == 0 || alpha.experts != m_count)
    throw ConfigError("maes_loss: " + std::to_string(m_count) + " expert series but alpha has " +
                      std::to_string(alpha.experts) + " experts");
  for (const auto& p : expert_probs) require_same_shape(p, labels, "maes_loss");
  if (alpha.rows != labels.rows || alpha.steps != labels.steps)
    throw ConfigError("maes_loss: alpha shape does not match labels");
  alpha.validate();

  std::vector<double> terms(m_count);
  double total = 0.0;
  for (std::size_t n = 0; n < labels.rows; ++n) {
    for (std::size_t t = 0; t < labels.steps; ++t) {
      const bool y = labels.at(n, t) != 0;
      for (std::size_t m = 0; m < m_count; ++m) {
        const double p = std::clamp(expert_probs[m].at(n, t), seq::kProbFloor, 1.0 - seq::kProbFloor);
        const double a = alpha.at(n, t, m);
        terms[m] = (a > 0.0 ? std::log(a) : -INFINITY) + (y ? std::log(p) : std::log(1.0 - p));
      }
      const double mx = *std::max_element(terms.begin(), terms.end());
      double acc = 0.0;
      for (double v : terms) acc += std::exp(v - mx);
      total -= mx + std::log(acc);
    }
  }
  return total;
}

double importance_loss(const gate::GateWeights& alpha, ImportanceKind kind) {
  std::vector<double> mass(alpha.experts, 0.0);
  for (std::size_t n = 0; n < alpha.rows; ++n)
    for (std::size_t t = 0; t < alpha.steps; ++t)
      for (std::size_t m = 0; m < alpha.experts; ++m) mass[m] += alpha.at(n, t, m);
  if (kind == ImportanceKind::squared_mass) {
    double s = 0.0;
    for (double v : mass) s += v * v;
    return -s;
  }
  const double mu = static_cast<double>(alpha.rows * alpha.steps) / static_cast<double>(alpha.experts);
  if (mu == 0.0) return 0.0;
  double var = 0.0;
  for (double v : mass) var += (v - mu) * (v - mu);
  var /= static_cast<double>(alpha.experts);
  return var / (mu * mu);
}

Tensor maes_step_loss(std::span<const Tensor> expert_probs, const Tensor& log_alpha, const Tensor& target) {
  if (expert_probs.empty() || log_alpha.rank() == 0 || log_alpha.shape().back() != expert_probs.size())
    throw ConfigError("maes_step_loss: log_alpha " + shape_string(log_alpha.shape()) + " does not match " +
                      std::to_string(expert_probs.size()) + " experts");
  std::vector<Tensor> columns;
  columns.reserve(expert_probs.size());
  for (const auto& p : expert_probs) {
    Shape s = p.shape();
    s.push_back(1);
    columns.push_back(reshape(seq::bernoulli_log_likelihood(p, target), s));
  }
  return neg(sum(logsumexp(add(log_alpha, concat(columns)))));
}

Tensor maes_loss(const std::vector<std::vector<Tensor>>& expert_probs, std::span<const Tensor> log_alpha,
                 std::span<const Tensor> targets) {
  if (expert_probs.empty() || log_alpha.size() != targets.size())
    throw ConfigError("maes_loss: step counts of log_alpha and targets differ");
  Tensor total;
  std::vector<Tensor> at_t(expert_probs.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (std::size_t m = 0; m < expert_probs.size(); ++m) at_t[m] = expert_probs[m].at(t);
    const Tensor s = maes_step_loss(at_t, log_alpha[t], targets[t]);
    total = t == 0 ? s : add(total, s);
  }
  return total;
}

Tensor importance_loss(std::span<const Tensor> alpha, ImportanceKind kind) {
  if (alpha.empty()) throw ConfigError("importance_loss: no steps");
  Tensor mass;
  std::size_t entries = 0;
  for (std::size_t t = 0; t < alpha.size(); ++t) {
    const Tensor s = sum_leading(alpha[t]);
    mass = t == 0 ? s : add(mass, s);
    entries += alpha[t].size() / alpha[t].shape().back();
  }
  if (kind == ImportanceKind::squared_mass) return neg(sum(mul(mass, mass)));
  // Each alpha row sums to one, so the mean mass per expert is a constant.
  const double m_count = static_cast<double>(mass.size());
  const double mu = static_cast<double>(entries) / m_count;
  const Tensor centered = affine(mass, 1.0, -mu);
  return affine(mean(mul(centered, centered)), 1.0 / (mu * mu), 0.0);
}

}  // namespace maeslab::maes
