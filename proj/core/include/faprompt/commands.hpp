// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "faprompt/data.hpp"
#include "faprompt/metrics.hpp"
#include "faprompt/run_config.hpp"
#include "faprompt/training.hpp"

namespace faprompt {

/// Opens the dataset named by the config (directory tree or synthetic).
DatasetHandle open_dataset(const RunConfig& config);

/// Trains from scratch and writes resolved-config.json, train-log.jsonl and
/// checkpoint.fapk into the output directory. Returns the checkpoint path.
std::string run_train(const RunConfig& config);

/// Evaluates a checkpoint on the config's test split: fused smoothed anomaly
/// maps, image/pixel metrics. Writes eval-report.json (and a per-image score
/// CSV when `per_image_csv` is nonempty) into the output directory.
EvalReport run_eval(const RunConfig& config, const std::string& checkpoint_path,
                    const std::string& per_image_csv = "");

/// Serializes a report with reproducible bytes.
std::string eval_report_json(const EvalReport& report);

/// Scores one image: writes <stem>_anomaly.png (16-bit grayscale, image
/// dimensions) and <stem>_score.json into out_dir.
void run_score(const std::string& checkpoint_path, const std::string& image_path,
               const std::string& out_dir);

/// Per-prompt analysis export: for every sample of the split, the maximum
/// patch score against each individual (prior-free) abnormality prompt
/// embedding, one CSV row per image.
void run_export_prompt_scores(const std::string& checkpoint_path, const std::string& data_root,
                              const std::string& out_csv, Split split = Split::Test);

/// Materializes a synthetic dataset tree under out_dir.
void run_synth(const std::string& out_dir, const SynthSpec& spec);

}  // namespace faprompt
