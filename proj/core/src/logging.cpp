// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/logging.hpp"

#include <cstdlib>
#include <iostream>

namespace faprompt {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("FAPROMPT_LOG");
        if (env == nullptr) return LogLevel::Info;
        const std::string value(env);
        if (value == "debug") return LogLevel::Debug;
        if (value == "warn") return LogLevel::Warn;
        return LogLevel::Info;
    }();
    return level;
}

namespace {

void emit(LogLevel at, const char* tag, const std::string& msg) {
    if (static_cast<int>(at) < static_cast<int>(log_level())) return;
    std::cerr << tag << msg << '\n';
}

}  // namespace

void log_debug(const std::string& msg) { emit(LogLevel::Debug, "[debug] ", msg); }
void log_info(const std::string& msg) { emit(LogLevel::Info, "[info] ", msg); }
void log_warn(const std::string& msg) { emit(LogLevel::Warn, "[warn] ", msg); }

}  // namespace faprompt
