// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/maes/train.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "maeslab/diffcore/adam.hpp"
#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"
#include "maeslab/log.hpp"
#include "maeslab/seeding.hpp"
#include "maeslab/seqmodels/loss.hpp"

namespace maeslab::maes {

using namespace diff;

std::string to_string(LossKind kind) { return kind == LossKind::maes ? "maes" : "bce"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "maes") return LossKind::maes;
  if (name == "bce") return LossKind::bce;
  throw ConfigError("unknown loss kind '" + name + "' (expected maes or bce)");
}

std::string to_string(ImportanceKind kind) {
  return kind == ImportanceKind::squared_mass ? "squared_mass" : "cv_squared";
}

ImportanceKind parse_importance_kind(const std::string& name) {
  if (name == "squared_mass") return ImportanceKind::squared_mass;
  if (name == "cv_squared") return ImportanceKind::cv_squared;
  throw ConfigError("unknown importance kind '" + name + "' (expected squared_mass or cv_squared)");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("TrainConfig: batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("TrainConfig: learning_rate must be finite and >= 0");
  if (!(w_imp >= 0.0) || !std::isfinite(w_imp)) throw ConfigError("TrainConfig: w_imp must be finite and >= 0");
  if (pretrain_epochs > epochs)
    throw ConfigError("TrainConfig: pretrain_epochs " + std::to_string(pretrain_epochs) + " exceeds epochs " +
                      std::to_string(epochs));
}

namespace {

constexpr std::uint64_t kShuffleStream = 7;
constexpr std::uint64_t kPretrainStream = 8;

struct Evaluation {
  double loss = 0.0;
  double apr = 0.0;
};

Evaluation evaluate(const MaesModel& model, const data::Dataset& ds, const LabelMatrix& labels) {
  if (ds.validation.empty()) return {};
  const auto pred = predict(model, ds.validation);
  Evaluation e;
  e.loss = maes_loss(pred.experts, pred.alpha, labels) / static_cast<double>(labels.values.size());
  e.apr = seq::validation_apr(pred.ensemble, labels);
  return e;
}

Tensor batch_loss(const MaesModel& model, const seq::SequenceBatch& batch, const TrainConfig& config) {
  const auto out = model.forward(batch.inputs);
  if (config.loss_kind == LossKind::bce) return seq::bce_loss(out.ensemble, batch.targets);
  std::vector<Tensor> log_alpha;
  log_alpha.reserve(out.scores.size());
  for (const auto& s : out.scores) log_alpha.push_back(log_softmax(s));
  Tensor loss = maes_loss(out.expert_probs, log_alpha, batch.targets);
  if (config.w_imp != 0.0)
    loss = add(loss, affine(importance_loss(out.alpha, config.importance), config.w_imp, 0.0));
  return loss;
}

}  // namespace

TrainResult train_maes(MaesModel& model, const data::Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.train.empty()) throw ConfigError("train_maes: empty training split");
  TrainResult result;
  const auto val_labels = data::label_matrix(dataset.validation);
  MaesModel::Snapshot best;
  const auto consider = [&](EpochRecord rec) {
    result.history.push_back(std::move(rec));
    const auto& r = result.history.back();
    if (result.best_epoch < 0 || r.validation_apr > result.best_validation_apr) {
      result.best_epoch = static_cast<long>(result.history.size() - 1);
      result.best_validation_apr = r.validation_apr;
      best = model.snapshot();
    }
  };

  if (config.pretrain_epochs > 0) {
    for (std::size_t m = 0; m < model.experts().size(); ++m) {
      const seq::FitOptions opts{.epochs = config.pretrain_epochs,
                                 .batch_size = config.batch_size,
                                 .learning_rate = config.learning_rate,
                                 .seed = mix_seed(config.seed, kPretrainStream * 64 + m)};
      result.pretrain.push_back(seq::train_expert(model.experts()[m], dataset, opts));
    }
    const auto ev = evaluate(model, dataset, val_labels);
    consider({config.pretrain_epochs - 1, "pretrain", 0.0, ev.loss, ev.apr});
  }

  auto params = model.parameters();
  AdamState adam(AdamConfig{.learning_rate = config.learning_rate});
  std::mt19937_64 rng(mix_seed(config.seed, kShuffleStream));
  for (std::size_t e = 0; e < config.joint_epochs(); ++e) {
    const std::size_t epoch = config.pretrain_epochs + e;
    double loss_total = 0.0;
    std::size_t entries = 0;
    const auto batches = seq::shuffled_batches(dataset.train.size(), config.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto batch = seq::make_batch(dataset.train, batches[b]);
      const Tensor loss = batch_loss(model, batch, config);
      if (!std::isfinite(loss.item())) {
        std::ostringstream os;
        os << "train_maes: non-finite loss " << loss.item() << " at epoch " << epoch << " batch " << b;
        throw TrainingError(os.str());
      }
      loss.backward();
      adam_step(params, adam);
      loss_total += loss.item();
      entries += batch.size * batch.steps;
    }
    const auto ev = evaluate(model, dataset, val_labels);
    log::debug("maes epoch " + std::to_string(epoch) + " train " + std::to_string(loss_total / double(entries)) +
               " val apr " + std::to_string(ev.apr));
    consider({epoch, "joint", loss_total / static_cast<double>(entries), ev.loss, ev.apr});
  }
  if (!best.empty()) model.restore(best);
  return result;
}

}  // namespace maeslab::maes
