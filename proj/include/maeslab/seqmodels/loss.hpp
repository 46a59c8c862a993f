// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <span>
#include <vector>

#include "maeslab/diffcore/tensor.hpp"
#include "maeslab/series.hpp"

namespace maeslab::seq {

/// Probabilities are clamped to [kProbFloor, 1 - kProbFloor] before any log.
inline constexpr double kProbFloor = 1e-7;

/// Elementwise y log p + (1 - y) log(1 - p) on clamped p.
diff::Tensor bernoulli_log_likelihood(const diff::Tensor& p, const diff::Tensor& y);

/// -sum over rows and steps of the Bernoulli log-likelihood.
diff::Tensor bce_loss(std::span<const diff::Tensor> probs, std::span<const diff::Tensor> targets);

/// Mean BCE over all (n, t) entries, plain doubles.
double mean_bce(const Series& probs, const LabelMatrix& labels);
/// Mean BCE at each step.
std::vector<double> stepwise_bce(const Series& probs, const LabelMatrix& labels);

}  // namespace maeslab::seq
