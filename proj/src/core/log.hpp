// Copyright 2026 The usr-spectral Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "json.hpp"
#include <string_view>

namespace usr::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_level(Level level);
Level level();

// Emits one JSON object per line on stderr: {"level":..,"event":..,...fields}.
void emit(Level level, std::string_view event, const nlohmann::json& fields = {});

inline void info(std::string_view event, const nlohmann::json& fields = {}) {
  emit(Level::Info, event, fields);
}
inline void warn(std::string_view event, const nlohmann::json& fields = {}) {
  emit(Level::Warn, event, fields);
}
inline void error(std::string_view event, const nlohmann::json& fields = {}) {
  emit(Level::Error, event, fields);
}

}  // namespace usr::log
