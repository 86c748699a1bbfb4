/**
 * Copyright 2026 The BO-Aug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef BOAUG_LOG_HPP_
#define BOAUG_LOG_HPP_

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace boaug::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// Verbosity comes from the BOAUG_LOG environment variable
/// (error|warn|info|debug or 0..3); default is warn.
inline Level threshold() {
  static Level level = [] {
    const char* env = std::getenv("BOAUG_LOG");
    if (!env) return Level::kWarn;
    std::string v(env);
    if (v == "error" || v == "0") return Level::kError;
    if (v == "warn" || v == "1") return Level::kWarn;
    if (v == "info" || v == "2") return Level::kInfo;
    if (v == "debug" || v == "3") return Level::kDebug;
    return Level::kWarn;
  }();
  return level;
}

inline void write(Level level, const std::string& msg) {
  if (level > threshold()) return;
  static std::mutex mu;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[boaug:" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

inline void error(const std::string& msg) { write(Level::kError, msg); }
inline void warn(const std::string& msg) { write(Level::kWarn, msg); }
inline void info(const std::string& msg) { write(Level::kInfo, msg); }
inline void debug(const std::string& msg) { write(Level::kDebug, msg); }

}  // namespace boaug::log

#endif  // BOAUG_LOG_HPP_
