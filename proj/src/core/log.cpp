// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace usr::log {
namespace {

std::atomic<Level> g_level{Level::Info};
std::mutex g_mutex;

const char* level_name(Level level) {
  switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    case Level::Off: break;
  }
  return "off";
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void emit(Level lvl, std::string_view event, const nlohmann::json& fields) {
  if (lvl < g_level.load()) return;
  nlohmann::json record = {{"level", level_name(lvl)}, {"event", event}};
  if (fields.is_object()) {
    for (auto it = fields.begin(); it != fields.end(); ++it) record[it.key()] = it.value();
  }
  const std::string line = record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  std::lock_guard lock(g_mutex);
  std::fprintf(stderr, "%s\n", line.c_str());
}

}  // namespace usr::log
