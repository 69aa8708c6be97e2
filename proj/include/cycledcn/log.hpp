// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace cdn {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

inline std::atomic<LogLevel>& log_level() {
  static std::atomic<LogLevel> level{LogLevel::Info};
  return level;
}

inline void log(LogLevel level, std::string_view message) {
  if (level < log_level().load()) return;
  static std::mutex mu;
  static constexpr const char* kNames[] = {"debug", "info", "warning", "error"};
  std::lock_guard lock(mu);
  std::cerr << "[" << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

inline void log_info(std::string_view m) { log(LogLevel::Info, m); }
inline void log_warn(std::string_view m) { log(LogLevel::Warn, m); }

}  // namespace cdn
