// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace faprompt {

// Bad arguments or data handed to an operation (maps to CLI exit code 1).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or inconsistent configuration (maps to CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Dataset ingestion failure; the message names the offending file.
class IngestionError : public std::runtime_error {
public:
    explicit IngestionError(const std::string& what) : std::runtime_error(what) {}
};

// Metric is mathematically undefined for the given input (e.g. single-class AUROC).
class MetricError : public std::runtime_error {
public:
    explicit MetricError(const std::string& what) : std::runtime_error(what) {}
};

// Training aborted (non-finite loss, optimizer failure, ...).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace faprompt
