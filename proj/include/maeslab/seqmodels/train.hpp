// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "maeslab/datagen/datagen.hpp"
#include "maeslab/seqmodels/lstm.hpp"

namespace maeslab::seq {

struct FitOptions {
  std::size_t epochs = 15;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;       // mean per (n, t)
  double validation_loss = 0.0;  // mean per (n, t)
  double validation_apr = 0.0;   // step-averaged
};

struct FitHistory {
  std::vector<EpochRecord> epochs;
  /// Index into epochs of the retained parameters, or -1 if none was
  /// evaluated (zero epochs).
  long best_epoch = -1;
  double best_validation_apr = 0.0;
};

/// BCE training with Adam; the parameters with the best validation APR are
/// kept. Throws TrainingError on a non-finite loss.
FitHistory train_expert(LstmExpert& expert, const data::Dataset& dataset, const FitOptions& options);

/// Step-averaged APR, or 0 when every step lacks positives.
double validation_apr(const Series& probs, const LabelMatrix& labels);

}  // namespace maeslab::seq
