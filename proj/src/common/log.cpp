// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace maeslab::log {

namespace {

std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;

void emit(Level at, const char* tag, std::string_view message) {
  if (at < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::clog << '[' << tag << "] " << message << '\n';
}

}  // namespace

void set_level(Level level) noexcept { g_level.store(level); }
Level level() noexcept { return g_level.load(); }

void debug(std::string_view message) { emit(Level::debug, "debug", message); }
void info(std::string_view message) { emit(Level::info, "info", message); }
void warn(std::string_view message) { emit(Level::warning, "warn", message); }
void error(std::string_view message) { emit(Level::error, "error", message); }

}  // namespace maeslab::log
