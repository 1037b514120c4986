// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "faprompt/errors.hpp"
#include "json_conv.hpp"

namespace faprompt {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& node, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : node.items()) {
        if (allowed.find(key) == allowed.end()) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read_into(const json& node, const char* key, T& out) {
    if (auto it = node.find(key); it != node.end()) {
        out = it->get<T>();
    }
}

void read_size_pair(const json& node, const char* key, std::size_t& h, std::size_t& w,
                    const std::string& where) {
    if (auto it = node.find(key); it != node.end()) {
        if (!it->is_array() || it->size() != 2) {
            throw ConfigError(where + "." + key + " must be [height, width]");
        }
        h = it->at(0).get<std::size_t>();
        w = it->at(1).get<std::size_t>();
    }
}

}  // namespace

void RunConfig::validate() const {
    backbone.validate();
    train.validate();
    if (data.root.empty() == !data.synth.has_value()) {
        throw ConfigError("data: exactly one of 'root' or 'synth' must be given");
    }
    if (eval.fpr_limit <= 0.0 || eval.fpr_limit > 1.0) {
        throw ConfigError("eval.fpr_limit must be in (0, 1]");
    }
    if (backbone.input_h != train.input_h || backbone.input_w != train.input_w) {
        throw ConfigError("backbone input size must follow train.input_size");
    }
}

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown_keys(doc, {"backbone", "train", "data", "eval", "output_dir"}, "config");

    RunConfig config;

    if (auto it = doc.find("train"); it != doc.end()) {
        const json& t = *it;
        reject_unknown_keys(t,
                            {"lr", "batch_size", "epochs", "input_size", "E", "E_prime", "K",
                             "M", "tau", "gamma", "alpha", "sigma", "seed"},
                            "train");
        read_into(t, "lr", config.train.lr);
        read_into(t, "batch_size", config.train.batch_size);
        read_into(t, "epochs", config.train.epochs);
        read_size_pair(t, "input_size", config.train.input_h, config.train.input_w, "train");
        read_into(t, "E", config.train.num_normal);
        read_into(t, "E_prime", config.train.num_abnormal);
        read_into(t, "K", config.train.num_prompts);
        read_into(t, "M", config.train.top_m);
        read_into(t, "tau", config.train.tau);
        read_into(t, "gamma", config.train.gamma);
        read_into(t, "alpha", config.train.alpha);
        read_into(t, "sigma", config.train.sigma);
        read_into(t, "seed", config.train.seed);
    }

    config.backbone.seed = config.train.seed;
    if (auto it = doc.find("backbone"); it != doc.end()) {
        const json& b = *it;
        config.backbone_explicit = true;
        reject_unknown_keys(b,
                            {"kind", "embedding_dim", "token_dim", "deep_prompt_depth",
                             "deep_prompt_length", "patch_size", "seed", "weights_path"},
                            "backbone");
        read_into(b, "kind", config.backbone.kind);
        read_into(b, "embedding_dim", config.backbone.embedding_dim);
        read_into(b, "token_dim", config.backbone.token_dim);
        read_into(b, "deep_prompt_depth", config.backbone.deep_prompt_depth);
        read_into(b, "deep_prompt_length", config.backbone.deep_prompt_length);
        read_into(b, "patch_size", config.backbone.patch_size);
        read_into(b, "seed", config.backbone.seed);
        read_into(b, "weights_path", config.backbone.weights_path);
    }
    config.backbone.input_h = config.train.input_h;
    config.backbone.input_w = config.train.input_w;

    if (auto it = doc.find("data"); it != doc.end()) {
        const json& d = *it;
        reject_unknown_keys(d, {"root", "synth"}, "data");
        read_into(d, "root", config.data.root);
        if (auto sit = d.find("synth"); sit != d.end()) {
            const json& s = *sit;
            reject_unknown_keys(s, {"seed", "n_train", "n_test", "size", "anomaly_fraction"},
                                "data.synth");
            SynthSpec spec;
            spec.seed = config.train.seed;
            read_into(s, "seed", spec.seed);
            read_into(s, "n_train", spec.n_train);
            read_into(s, "n_test", spec.n_test);
            read_into(s, "size", spec.size);
            read_into(s, "anomaly_fraction", spec.anomaly_fraction);
            config.data.synth = spec;
        }
    }

    if (auto it = doc.find("eval"); it != doc.end()) {
        reject_unknown_keys(*it, {"fpr_limit"}, "eval");
        read_into(*it, "fpr_limit", config.eval.fpr_limit);
    }

    read_into(doc, "output_dir", config.output_dir);

    config.validate();
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

std::string resolved_config_json(const RunConfig& config) {
    json doc;
    doc["backbone"] = detail::backbone_to_json(config.backbone);
    doc["backbone"].erase("input_size");  // follows train.input_size
    doc["train"] = detail::train_to_json(config.train);
    if (config.data.synth.has_value()) {
        const SynthSpec& s = *config.data.synth;
        doc["data"] = {{"synth",
                        {{"seed", s.seed},
                         {"n_train", s.n_train},
                         {"n_test", s.n_test},
                         {"size", s.size},
                         {"anomaly_fraction", s.anomaly_fraction}}}};
    } else {
        doc["data"] = {{"root", config.data.root}};
    }
    doc["eval"] = {{"fpr_limit", config.eval.fpr_limit}};
    doc["output_dir"] = config.output_dir;
    return doc.dump(2) + "\n";
}

}  // namespace faprompt
