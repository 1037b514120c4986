// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

// Internal JSON <-> config conversions shared by checkpointing and the run
// config parser. Not installed.

#pragma once

#include <json.hpp>

#include "faprompt/backbone.hpp"
#include "faprompt/training.hpp"

namespace faprompt::detail {

inline nlohmann::json backbone_to_json(const BackboneConfig& cfg) {
    return nlohmann::json{
        {"kind", cfg.kind},
        {"embedding_dim", cfg.embedding_dim},
        {"token_dim", cfg.token_dim},
        {"deep_prompt_depth", cfg.deep_prompt_depth},
        {"deep_prompt_length", cfg.deep_prompt_length},
        {"input_size", {cfg.input_h, cfg.input_w}},
        {"patch_size", cfg.patch_size},
        {"seed", cfg.seed},
        {"weights_path", cfg.weights_path},
    };
}

inline BackboneConfig backbone_from_json(const nlohmann::json& j) {
    BackboneConfig cfg;
    cfg.kind = j.at("kind").get<std::string>();
    cfg.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    cfg.token_dim = j.at("token_dim").get<std::size_t>();
    cfg.deep_prompt_depth = j.at("deep_prompt_depth").get<std::size_t>();
    cfg.deep_prompt_length = j.at("deep_prompt_length").get<std::size_t>();
    cfg.input_h = j.at("input_size").at(0).get<std::size_t>();
    cfg.input_w = j.at("input_size").at(1).get<std::size_t>();
    cfg.patch_size = j.at("patch_size").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    if (auto it = j.find("weights_path"); it != j.end()) {
        cfg.weights_path = it->get<std::string>();
    }
    return cfg;
}

inline nlohmann::json train_to_json(const TrainConfig& cfg) {
    return nlohmann::json{
        {"lr", cfg.lr},
        {"batch_size", cfg.batch_size},
        {"epochs", cfg.epochs},
        {"input_size", {cfg.input_h, cfg.input_w}},
        {"E", cfg.num_normal},
        {"E_prime", cfg.num_abnormal},
        {"K", cfg.num_prompts},
        {"M", cfg.top_m},
        {"tau", cfg.tau},
        {"gamma", cfg.gamma},
        {"alpha", cfg.alpha},
        {"sigma", cfg.sigma},
        {"seed", cfg.seed},
    };
}

inline TrainConfig train_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.lr = j.at("lr").get<double>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.input_h = j.at("input_size").at(0).get<std::size_t>();
    cfg.input_w = j.at("input_size").at(1).get<std::size_t>();
    cfg.num_normal = j.at("E").get<std::size_t>();
    cfg.num_abnormal = j.at("E_prime").get<std::size_t>();
    cfg.num_prompts = j.at("K").get<std::size_t>();
    cfg.top_m = j.at("M").get<std::size_t>();
    cfg.tau = j.at("tau").get<double>();
    cfg.gamma = j.at("gamma").get<double>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.sigma = j.at("sigma").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace faprompt::detail
