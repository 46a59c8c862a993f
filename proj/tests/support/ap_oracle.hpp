// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

// Brute-force PR-curve enumeration: one operating point per distinct score
// threshold, each evaluated by a full pass over the data.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>

namespace maeslab::testing {

inline std::optional<double> brute_force_ap(std::span<const double> scores,
                                            std::span<const std::uint8_t> labels) {
  std::size_t positives = 0;
  for (auto y : labels) positives += y != 0;
  if (positives == 0) return std::nullopt;
  const std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double tau : thresholds) {
    std::size_t predicted = 0;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= tau) {
        ++predicted;
        tp += labels[i] != 0;
      }
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

}  // namespace maeslab::testing
