// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/seqmodels/train.hpp"

#include <cmath>
#include <sstream>

#include "maeslab/diffcore/adam.hpp"
#include "maeslab/errors.hpp"
#include "maeslab/log.hpp"
#include "maeslab/metrics/metrics.hpp"
#include "maeslab/seqmodels/loss.hpp"

namespace maeslab::seq {

void FitOptions::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be finite and >= 0");
}

double validation_apr(const Series& probs, const LabelMatrix& labels) {
  return metrics::stepwise_apr(probs, labels, false).mean_apr;
}

FitHistory train_expert(LstmExpert& expert, const data::Dataset& dataset, const FitOptions& options) {
  options.validate();
  if (dataset.train.empty()) throw ConfigError("train_expert: empty training split");
  FitHistory history;
  diff::AdamState adam(diff::AdamConfig{.learning_rate = options.learning_rate});
  std::mt19937_64 rng(options.seed);
  const auto val_labels = data::label_matrix(dataset.validation);
  diff::ParamSet::Snapshot best;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    double loss_total = 0.0;
    std::size_t entries = 0;
    const auto batches = shuffled_batches(dataset.train.size(), options.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto batch = make_batch(dataset.train, batches[b]);
      const auto loss = bce_loss(expert.forward(batch), batch.targets);
      if (!std::isfinite(loss.item())) {
        std::ostringstream os;
        os << "train_expert: non-finite loss " << loss.item() << " at epoch " << epoch << " batch " << b
           << " (hidden_dim " << expert.spec().hidden_dim << ")";
        throw TrainingError(os.str());
      }
      loss.backward();
      diff::adam_step(expert.params(), adam);
      loss_total += loss.item();
      entries += batch.size * batch.steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_total / static_cast<double>(entries);
    if (!dataset.validation.empty()) {
      const auto probs = predict(expert, dataset.validation);
      rec.validation_loss = mean_bce(probs, val_labels);
      rec.validation_apr = validation_apr(probs, val_labels);
    }
    history.epochs.push_back(rec);
    log::debug("expert h=" + std::to_string(expert.spec().hidden_dim) + " epoch " + std::to_string(epoch) +
               " train " + std::to_string(rec.train_loss) + " val apr " + std::to_string(rec.validation_apr));
    if (history.best_epoch < 0 || rec.validation_apr > history.best_validation_apr) {
      history.best_epoch = static_cast<long>(epoch);
      history.best_validation_apr = rec.validation_apr;
      best = expert.params().snapshot();
    }
  }
  if (!best.empty()) expert.params().restore(best);
  return history;
}

}  // namespace maeslab::seq
