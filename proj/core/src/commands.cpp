// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/commands.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

#include "faprompt/errors.hpp"
#include "faprompt/logging.hpp"
#include "faprompt/png_io.hpp"
#include "faprompt/scoring.hpp"
#include "json_conv.hpp"

namespace fs = std::filesystem;

namespace faprompt {

namespace {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << text;
}

/// Inference for one sample against a loaded checkpoint: fused, smoothed
/// anomaly map plus the image-level score.
struct InferenceResult {
    Tensor map;  // input-size fused map after Gaussian smoothing
    double score = 0.0;
};

InferenceResult infer_sample(const Sample& sample, const Checkpoint& checkpoint,
                             const Backbone& backbone) {
    Sample resized = sample;
    const TrainConfig& tc = checkpoint.train;
    if (resized.image.dim(0) != tc.input_h || resized.image.dim(1) != tc.input_w) {
        resized.image = resize_image(resized.image, tc.input_h, tc.input_w);
        resized.mask = resize_mask_nearest(resized.mask, tc.input_h, tc.input_w);
    }

    Graph g;
    PromptBankVars bank_vars = PromptBankVars::attach(g, checkpoint.bank, false);
    PriorNetworkVars psi_vars = PriorNetworkVars::attach(g, checkpoint.psi, false);
    ModelForward fwd = model_forward(g, resized, checkpoint.bank, bank_vars, checkpoint.psi,
                                     psi_vars, backbone, tc);

    Tensor fused = inference_map(g.value(fwd.map_abnormal), g.value(fwd.map_normal),
                                 g.value(fwd.map_abnormal_refined),
                                 g.value(fwd.map_normal_refined));
    InferenceResult result;
    result.map = gaussian_smooth(fused, tc.sigma);
    result.score = g.value(fwd.final)[0];
    return result;
}

std::unique_ptr<Backbone> backbone_for(const Checkpoint& checkpoint) {
    return make_backbone(checkpoint.backbone);
}

}  // namespace

DatasetHandle open_dataset(const RunConfig& config) {
    if (config.data.synth.has_value()) {
        const SynthSpec& s = *config.data.synth;
        return synth_dataset(s.seed, s.n_train, s.n_test, s.size, s.anomaly_fraction);
    }
    return load_dataset(config.data.root);
}

std::string run_train(const RunConfig& config) {
    config.validate();
    if (config.output_dir.empty()) throw ConfigError("train: output_dir is required");
    fs::create_directories(config.output_dir);
    write_text_file((fs::path(config.output_dir) / "resolved-config.json").string(),
                    resolved_config_json(config));

    const DatasetHandle dataset = open_dataset(config);
    const std::unique_ptr<Backbone> backbone = make_backbone(config.backbone);

    const std::string log_path = (fs::path(config.output_dir) / "train-log.jsonl").string();
    std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
    if (!log) throw ValidationError("cannot open '" + log_path + "' for writing");

    Checkpoint checkpoint =
        train(config.train, dataset, *backbone, [&log](const StepRecord& record) {
            nlohmann::json line{
                {"epoch", record.epoch},   {"step", record.step},
                {"local", record.losses.local}, {"global", record.losses.global},
                {"prior", record.losses.prior}, {"oc", record.losses.oc},
                {"total", record.losses.total},
            };
            log << line.dump() << '\n';
        });

    const std::string checkpoint_path =
        (fs::path(config.output_dir) / "checkpoint.fapk").string();
    save_checkpoint(checkpoint, checkpoint_path);
    log_info("checkpoint written to " + checkpoint_path);
    return checkpoint_path;
}

std::string eval_report_json(const EvalReport& report) {
    nlohmann::json doc{
        {"image_auroc", report.image_auroc},   {"image_ap", report.image_ap},
        {"pixel_auroc", report.pixel_auroc},   {"pixel_pro", report.pixel_pro},
        {"n_images", report.n_images},         {"n_anomalous", report.n_anomalous},
    };
    return doc.dump(2) + "\n";
}

EvalReport run_eval(const RunConfig& config, const std::string& checkpoint_path,
                    const std::string& per_image_csv) {
    if (config.output_dir.empty()) throw ConfigError("eval: output_dir is required");
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    if (config.backbone_explicit) {
        const BackboneConfig& a = config.backbone;
        const BackboneConfig& b = checkpoint.backbone;
        if (a.kind != b.kind || a.embedding_dim != b.embedding_dim ||
            a.token_dim != b.token_dim || a.seed != b.seed) {
            throw ConfigError("eval: config backbone does not match the checkpoint backbone");
        }
    }
    const std::unique_ptr<Backbone> backbone = backbone_for(checkpoint);
    const DatasetHandle dataset = open_dataset(config);
    const std::vector<std::size_t> test = dataset.indices(Split::Test);
    if (test.empty()) throw ValidationError("eval: dataset has no test samples");

    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<Tensor> maps, masks;
    std::vector<std::string> sources;
    for (std::size_t index : test) {
        const Sample sample = dataset.sample(index);
        InferenceResult result = infer_sample(sample, checkpoint, *backbone);
        scores.push_back(result.score);
        labels.push_back(sample.label);
        maps.push_back(std::move(result.map));
        masks.push_back(resize_mask_nearest(sample.mask, checkpoint.train.input_h,
                                            checkpoint.train.input_w));
        sources.push_back(sample.source);
    }

    EvalReport report;
    report.n_images = test.size();
    report.n_anomalous = dataset.count_anomalous(Split::Test);
    report.image_auroc = auroc(scores, labels);
    report.image_ap = average_precision(scores, labels);

    std::vector<double> pixel_scores;
    std::vector<int> pixel_labels;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        for (std::size_t p = 0; p < maps[i].size(); ++p) {
            pixel_scores.push_back(maps[i][p]);
            pixel_labels.push_back(masks[i][p] != 0.0 ? 1 : 0);
        }
    }
    report.pixel_auroc = auroc(pixel_scores, pixel_labels);
    report.pixel_pro = pro(maps, masks, config.eval.fpr_limit);

    fs::create_directories(config.output_dir);
    write_text_file((fs::path(config.output_dir) / "eval-report.json").string(),
                    eval_report_json(report));
    if (!per_image_csv.empty()) {
        std::string csv = "source,label,score\n";
        for (std::size_t i = 0; i < scores.size(); ++i) {
            csv += sources[i] + "," + std::to_string(labels[i]) + "," +
                   format_double(scores[i]) + "\n";
        }
        write_text_file(per_image_csv, csv);
    }
    return report;
}

void run_score(const std::string& checkpoint_path, const std::string& image_path,
               const std::string& out_dir) {
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    const std::unique_ptr<Backbone> backbone = backbone_for(checkpoint);

    Sample sample;
    sample.image = read_rgb_png(image_path);
    sample.mask = Tensor({sample.image.dim(0), sample.image.dim(1)});
    sample.source = image_path;

    InferenceResult result = infer_sample(sample, checkpoint, *backbone);
    // The exported map matches the input image dimensions.
    Tensor map = result.map;
    if (map.dim(0) != sample.image.dim(0) || map.dim(1) != sample.image.dim(1)) {
        Tensor flat({map.size()});
        for (std::size_t i = 0; i < map.size(); ++i) flat[i] = map[i];
        map = to_segmentation_map(flat, map.dim(0), map.dim(1), sample.image.dim(0),
                                  sample.image.dim(1));
    }

    fs::create_directories(out_dir);
    const std::string stem = fs::path(image_path).stem().string();
    write_gray16_png((fs::path(out_dir) / (stem + "_anomaly.png")).string(), map);

    nlohmann::json doc{{"image", image_path}, {"score", result.score}};
    write_text_file((fs::path(out_dir) / (stem + "_score.json")).string(), doc.dump(2) + "\n");
}

void run_export_prompt_scores(const std::string& checkpoint_path, const std::string& data_root,
                              const std::string& out_csv, Split split) {
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    const std::unique_ptr<Backbone> backbone = backbone_for(checkpoint);
    const DatasetHandle dataset = load_dataset(data_root);
    const std::vector<std::size_t> selected = dataset.indices(split);
    if (selected.empty()) throw ValidationError("export-prompt-scores: split is empty");

    const TrainConfig& tc = checkpoint.train;

    // Prior-free prompt embeddings are sample-independent; encode them once.
    Graph g;
    PromptBankVars bank_vars = PromptBankVars::attach(g, checkpoint.bank, false);
    const PromptEmbeddings prompts =
        encode_prompt_bank(g, bank_vars, checkpoint.bank, *backbone);

    std::string csv = "source,label";
    for (std::size_t k = 0; k < checkpoint.bank.num_prompts; ++k) {
        csv += ",prompt_" + std::to_string(k);
    }
    csv += "\n";

    for (std::size_t index : selected) {
        Sample sample = dataset.sample(index);
        if (sample.image.dim(0) != tc.input_h || sample.image.dim(1) != tc.input_w) {
            sample.image = resize_image(sample.image, tc.input_h, tc.input_w);
        }
        const ImageEncoding enc = backbone->encode_image(sample.image);
        csv += sample.source + "," + std::to_string(sample.label);
        for (std::size_t k = 0; k < checkpoint.bank.num_prompts; ++k) {
            auto [s_n, s_a] = patch_scores(g, enc.patch_embeddings, prompts.normal,
                                           prompts.per_prompt[k], tc.tau);
            csv += "," + format_double(g.value(s_a).max());
        }
        csv += "\n";
    }
    write_text_file(out_csv, csv);
}

void run_synth(const std::string& out_dir, const SynthSpec& spec) {
    const DatasetHandle dataset =
        synth_dataset(spec.seed, spec.n_train, spec.n_test, spec.size, spec.anomaly_fraction);
    materialize_dataset(dataset, out_dir);
    log_info("synthetic dataset written to " + out_dir);
}

}  // namespace faprompt
