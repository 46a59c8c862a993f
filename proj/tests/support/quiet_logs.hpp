// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include "maeslab/log.hpp"

namespace maeslab::testing {

/// Silences logging for the lifetime of the object.
class QuietLogs {
 public:
  QuietLogs() : saved_(log::level()) { log::set_level(log::Level::off); }
  ~QuietLogs() { log::set_level(saved_); }
  QuietLogs(const QuietLogs&) = delete;
  QuietLogs& operator=(const QuietLogs&) = delete;

 private:
  log::Level saved_;
};

}  // namespace maeslab::testing
