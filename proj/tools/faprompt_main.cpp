// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "faprompt/commands.hpp"
#include "faprompt/errors.hpp"
#include "faprompt/logging.hpp"

namespace {

int dispatch(int argc, char** argv) {
    CLI::App app{"faprompt: trainable zero-shot anomaly detection over a frozen "
                 "vision-language backbone"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, image_path, data_root, out_dir = ".",
                             csv_path, split_name = "test";

    CLI::App* cmd_train = app.add_subcommand("train", "Train prompts on a dataset");
    cmd_train->add_option("--config", config_path, "Run config JSON")->required();

    CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    cmd_eval->add_option("--config", config_path, "Run config JSON")->required();
    cmd_eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    cmd_eval->add_option("--csv", csv_path, "Optional per-image score CSV");

    CLI::App* cmd_score = app.add_subcommand("score", "Score a single image");
    cmd_score->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    cmd_score->add_option("--image", image_path, "Input PNG")->required();
    cmd_score->add_option("--out", out_dir, "Output directory (default: .)");

    CLI::App* cmd_export =
        app.add_subcommand("export-prompt-scores", "Per-prompt max patch scores as CSV");
    cmd_export->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    cmd_export->add_option("--data", data_root, "Dataset root directory")->required();
    cmd_export->add_option("--out", csv_path, "Output CSV path")->required();
    cmd_export->add_option("--split", split_name, "train or test (default: test)");

    faprompt::SynthSpec synth;
    CLI::App* cmd_synth = app.add_subcommand("synth", "Materialize a synthetic dataset");
    cmd_synth->add_option("--out", out_dir, "Output directory")->required();
    cmd_synth->add_option("--seed", synth.seed, "Generator seed (default: 0)");
    cmd_synth->add_option("--n-train", synth.n_train, "Training samples (default: 200)");
    cmd_synth->add_option("--n-test", synth.n_test, "Test samples (default: 80)");
    cmd_synth->add_option("--size", synth.size, "Image side length (default: 64)");
    cmd_synth->add_option("--anomaly-fraction", synth.anomaly_fraction,
                          "Anomalous fraction per split (default: 0.5)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    if (cmd_train->parsed()) {
        faprompt::run_train(faprompt::load_run_config(config_path));
    } else if (cmd_eval->parsed()) {
        const faprompt::EvalReport report =
            faprompt::run_eval(faprompt::load_run_config(config_path), checkpoint_path, csv_path);
        std::cout << faprompt::eval_report_json(report);
    } else if (cmd_score->parsed()) {
        faprompt::run_score(checkpoint_path, image_path, out_dir);
    } else if (cmd_export->parsed()) {
        if (split_name != "train" && split_name != "test") {
            throw faprompt::ValidationError("--split must be 'train' or 'test'");
        }
        faprompt::run_export_prompt_scores(
            checkpoint_path, data_root, csv_path,
            split_name == "train" ? faprompt::Split::Train : faprompt::Split::Test);
    } else if (cmd_synth->parsed()) {
        faprompt::run_synth(out_dir, synth);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const faprompt::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const faprompt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const faprompt::IngestionError& e) {
        std::cerr << "ingestion error: " << e.what() << '\n';
        return 1;
    } catch (const faprompt::MetricError& e) {
        std::cerr << "metric error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << '\n';
        return 2;
    }
}
