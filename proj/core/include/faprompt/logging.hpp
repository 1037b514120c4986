// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace faprompt {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2 };

// Level is read once from FAPROMPT_LOG ({debug,info,warn}); default is info.
LogLevel log_level();

void log_debug(const std::string& msg);
void log_info(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace faprompt
