// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "faprompt/backbone.hpp"
#include "faprompt/training.hpp"

namespace faprompt {

struct SynthSpec {
    std::uint64_t seed = 0;
    std::size_t n_train = 200;
    std::size_t n_test = 80;
    std::size_t size = 64;
    double anomaly_fraction = 0.5;
};

struct DataConfig {
    std::string root;               // on-disk tree, exclusive with synth
    std::optional<SynthSpec> synth;
};

struct EvalConfig {
    double fpr_limit = 0.3;
};

/// Fully resolved run configuration. Parsing is strict: unknown keys are
/// rejected at every level, defaults are applied, and the resolved document
/// is echoed into the output directory by the commands that consume it.
/// backbone.seed and data.synth.seed default to train.seed; the backbone
/// input size always follows train.input_size.
struct RunConfig {
    BackboneConfig backbone;
    TrainConfig train;
    DataConfig data;
    EvalConfig eval;
    std::string output_dir;
    bool backbone_explicit = false;  // a backbone section was present

    void validate() const;  // throws ConfigError
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Canonical JSON echo of a resolved configuration (sorted keys, so the
/// bytes are reproducible).
std::string resolved_config_json(const RunConfig& config);

}  // namespace faprompt
