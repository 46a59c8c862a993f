// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "maeslab/datagen/datagen.hpp"
#include "maeslab/maes/loss.hpp"
#include "maeslab/maes/model.hpp"
#include "maeslab/seqmodels/train.hpp"

namespace maeslab::maes {

enum class LossKind {
  /// Mixture likelihood (plus w_imp times the importance loss).
  maes,
  /// BCE on the ensemble prediction sum_m alpha_m p_m.
  bce,
};

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);
std::string to_string(ImportanceKind kind);
ImportanceKind parse_importance_kind(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  double w_imp = 0.0;
  /// Leading epochs spent training each expert alone with BCE; the joint
  /// phase runs for epochs - pretrain_epochs.
  std::size_t pretrain_epochs = 0;
  LossKind loss_kind = LossKind::maes;
  ImportanceKind importance = ImportanceKind::squared_mass;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t joint_epochs() const { return epochs - pretrain_epochs; }
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string phase;             // "pretrain" or "joint"
  double train_loss = 0.0;       // mean per (n, t) of the optimized loss
  double validation_loss = 0.0;  // mean per (n, t) of the mixture loss
  double validation_apr = 0.0;   // step-averaged, ensemble prediction
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::vector<seq::FitHistory> pretrain;
  long best_epoch = -1;  // index into history
  double best_validation_apr = 0.0;
};

/// Optional BCE pre-training of each expert, then joint Adam training of all
/// components; the parameters with the best validation APR are kept. Throws
/// TrainingError with epoch and batch on a non-finite loss.
TrainResult train_maes(MaesModel& model, const data::Dataset& dataset, const TrainConfig& config);

}  // namespace maeslab::maes
