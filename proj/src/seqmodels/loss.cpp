// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/seqmodels/loss.hpp"

#include <algorithm>
#include <cmath>

#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"

namespace maeslab::seq {

using namespace diff;

Tensor bernoulli_log_likelihood(const Tensor& p, const Tensor& y) {
  const Tensor pc = clamp(p, kProbFloor, 1.0 - kProbFloor);
  return add(mul(y, log(pc)), mul(one_minus(y), log(one_minus(pc))));
}

Tensor bce_loss(std::span<const Tensor> probs, std::span<const Tensor> targets) {
  if (probs.size() != targets.size() || probs.empty())
    throw ConfigError("bce_loss: " + std::to_string(probs.size()) + " prediction steps but " +
                      std::to_string(targets.size()) + " target steps");
  Tensor total;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    const Tensor s = sum(bernoulli_log_likelihood(probs[t], targets[t]));
    total = t == 0 ? s : add(total, s);
  }
  return neg(total);
}

namespace {
double bce_entry(double p, std::uint8_t y) {
  const double pc = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  return y ? -std::log(pc) : -std::log(1.0 - pc);
}
}  // namespace

double mean_bce(const Series& probs, const LabelMatrix& labels) {
  require_same_shape(probs, labels, "mean_bce");
  if (probs.values.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < probs.values.size(); ++k) total += bce_entry(probs.values[k], labels.values[k]);
  return total / static_cast<double>(probs.values.size());
}

std::vector<double> stepwise_bce(const Series& probs, const LabelMatrix& labels) {
  require_same_shape(probs, labels, "stepwise_bce");
  std::vector<double> out(probs.steps, 0.0);
  if (probs.rows == 0) return out;
  for (std::size_t n = 0; n < probs.rows; ++n)
    for (std::size_t t = 0; t < probs.steps; ++t) out[t] += bce_entry(probs.at(n, t), labels.at(n, t));
  for (auto& v : out) v /= static_cast<double>(probs.rows);
  return out;
}

}  // namespace maeslab::seq
