// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <span>
#include <vector>

#include "maeslab/diffcore/tensor.hpp"
#include "maeslab/gate/gate.hpp"
#include "maeslab/series.hpp"

// Mixture likelihood loss
//   L = -sum_{n,t} log sum_m alpha_{t,m}^n p_m^{y} (1 - p_m)^{1-y}
// evaluated as -sum logsumexp_m(log alpha + per-expert log-likelihood), and
// the importance loss L_imp = -sum_m (sum_{n,t} alpha_{t,m}^n)^2.

namespace maeslab::maes {

enum class ImportanceKind {
  /// -sum_m (sum_{n,t} alpha)^2
  squared_mass,
  /// Squared coefficient of variation of the per-expert mass.
  cv_squared,
};

/// Plain-value loss. Throws UsageError if any alpha slice is off the simplex.
double maes_loss(std::span<const Series> expert_probs, const gate::GateWeights& alpha, const LabelMatrix& labels);
double importance_loss(const gate::GateWeights& alpha, ImportanceKind kind = ImportanceKind::squared_mass);

/// Differentiable loss for one step: expert_probs[m] is [B], log_alpha is
/// [B, M], target is [B]. Returns a scalar summed over the batch.
diff::Tensor maes_step_loss(std::span<const diff::Tensor> expert_probs, const diff::Tensor& log_alpha,
                            const diff::Tensor& target);

/// Sum of maes_step_loss over steps; expert_probs is [m][t], log_alpha [t].
diff::Tensor maes_loss(const std::vector<std::vector<diff::Tensor>>& expert_probs,
                       std::span<const diff::Tensor> log_alpha, std::span<const diff::Tensor> targets);

/// alpha is [t] -> [B, M].
diff::Tensor importance_loss(std::span<const diff::Tensor> alpha, ImportanceKind kind = ImportanceKind::squared_mass);

}  // namespace maeslab::maes
