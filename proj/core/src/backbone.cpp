// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/backbone.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#include "faprompt/errors.hpp"
#include "faprompt/rng.hpp"

namespace faprompt {

void BackboneConfig::validate() const {
    if (embedding_dim == 0 || token_dim == 0) {
        throw ConfigError("backbone: embedding_dim and token_dim must be positive");
    }
    if (input_h == 0 || input_w == 0) throw ConfigError("backbone: input size must be positive");
    if (kind == "toy") {
        if (patch_size == 0) throw ConfigError("backbone: patch_size must be positive");
        if (input_h % patch_size != 0 || input_w % patch_size != 0) {
            throw ConfigError("backbone: input size must be a multiple of patch_size");
        }
    }
}

namespace {

Tensor seeded_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
    Tensor t({rows, cols});
    for (double& v : t.data()) v = rng.gaussian(0.0, stddev);
    return t;
}

Tensor seeded_vector(Rng& rng, std::size_t n, double stddev) {
    Tensor t({n});
    for (double& v : t.data()) v = rng.gaussian(0.0, stddev);
    return t;
}

}  // namespace

ToyBackbone::ToyBackbone(BackboneConfig config) : config_(std::move(config)) {
    config_.validate();
    Rng rng(config_.seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t d = config_.embedding_dim;
    const std::size_t dt = config_.token_dim;
    const std::size_t pflat = config_.patch_size * config_.patch_size * 3;

    patch_weight_ = seeded_matrix(rng, d, pflat, 1.0 / std::sqrt(static_cast<double>(pflat)));
    patch_bias_ = seeded_vector(rng, d, 0.1);
    global_weight_ = seeded_matrix(rng, d, d, 1.0 / std::sqrt(static_cast<double>(d)));
    global_bias_ = seeded_vector(rng, d, 0.1);

    text_weights_.reserve(config_.deep_prompt_depth);
    text_biases_.reserve(config_.deep_prompt_depth);
    for (std::size_t layer = 0; layer < config_.deep_prompt_depth; ++layer) {
        text_weights_.push_back(seeded_matrix(rng, dt, dt, 1.0 / std::sqrt(static_cast<double>(dt))));
        text_biases_.push_back(seeded_vector(rng, dt, 0.1));
    }
    text_out_weight_ = seeded_matrix(rng, d, dt, 1.0 / std::sqrt(static_cast<double>(dt)));
    text_out_bias_ = seeded_vector(rng, d, 0.1);
    object_token_ = seeded_vector(rng, dt, 0.02);
}

ImageEncoding ToyBackbone::encode_image(const Tensor& image) const {
    if (image.rank() != 3 || image.dim(2) != 3) {
        throw ConfigError("encode_image: expected an h x w x 3 image");
    }
    if (image.dim(0) != config_.input_h || image.dim(1) != config_.input_w) {
        throw ConfigError("encode_image: image dimensions do not match the configured input size");
    }
    if (!image.all_finite()) throw ValidationError("encode_image: non-finite pixel values");

    const std::size_t p = config_.patch_size;
    const std::size_t gh = config_.input_h / p;
    const std::size_t gw = config_.input_w / p;
    const std::size_t l = gh * gw;
    const std::size_t d = config_.embedding_dim;
    const std::size_t pflat = p * p * 3;

    ImageEncoding enc;
    enc.grid_h = gh;
    enc.grid_w = gw;
    enc.patch_embeddings = Tensor({l, d});

    std::vector<double> patch(pflat);
    std::vector<double> mean_embed(d, 0.0);
    for (std::size_t py = 0; py < gh; ++py) {
        for (std::size_t px = 0; px < gw; ++px) {
            std::size_t flat = 0;
            for (std::size_t y = 0; y < p; ++y) {
                for (std::size_t x = 0; x < p; ++x) {
                    for (std::size_t c = 0; c < 3; ++c) {
                        patch[flat++] = image(py * p + y, px * p + x, c);
                    }
                }
            }
            const std::size_t row = py * gw + px;
            for (std::size_t i = 0; i < d; ++i) {
                double acc = patch_bias_[i];
                for (std::size_t j = 0; j < pflat; ++j) acc += patch_weight_(i, j) * patch[j];
                const double z = std::tanh(acc);
                enc.patch_embeddings(row, i) = z;
                mean_embed[i] += z;
            }
        }
    }
    for (double& v : mean_embed) v /= static_cast<double>(l);

    enc.image_embedding = Tensor({d});
    for (std::size_t i = 0; i < d; ++i) {
        double acc = global_bias_[i];
        for (std::size_t j = 0; j < d; ++j) acc += global_weight_(i, j) * mean_embed[j];
        enc.image_embedding[i] = std::tanh(acc);
    }
    return enc;
}

Var ToyBackbone::encode_text(Graph& g, std::span<const Var> tokens,
                             std::optional<Var> deep_prompts) const {
    if (tokens.empty()) throw ValidationError("encode_text: empty token sequence");
    const std::size_t dt = config_.token_dim;
    for (Var t : tokens) {
        if (g.value(t).size() != dt) {
            throw ValidationError("encode_text: token dimension mismatch");
        }
    }
    const std::size_t depth = config_.deep_prompt_depth;
    const std::size_t length = config_.deep_prompt_length;
    if (depth > 0 && length > 0) {
        if (!deep_prompts.has_value()) {
            throw ValidationError("encode_text: deep prompts required by this configuration");
        }
        const Tensor& dp = g.value(*deep_prompts);
        if (dp.size() != depth * length * dt) {
            throw ValidationError("encode_text: deep prompt shape mismatch");
        }
    }

    Var r = g.mean_vectors(tokens);
    for (std::size_t layer = 0; layer < depth; ++layer) {
        if (length > 0 && deep_prompts.has_value()) {
            std::vector<Var> layer_tokens;
            layer_tokens.reserve(length);
            for (std::size_t t = 0; t < length; ++t) {
                layer_tokens.push_back(
                    g.subvector(*deep_prompts, (layer * length + t) * dt, dt));
            }
            r = g.add(r, g.mean_vectors(layer_tokens));
        }
        Var w = g.leaf(text_weights_[layer]);
        Var b = g.leaf(text_biases_[layer]);
        r = g.tanh_op(g.add(g.matvec(w, r), b));
    }
    Var wo = g.leaf(text_out_weight_);
    Var bo = g.leaf(text_out_bias_);
    return g.add(g.matvec(wo, r), bo);
}

std::uint64_t ToyBackbone::parameter_hash() const {
    // FNV-1a over the raw bytes of every frozen tensor.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const Tensor& t) {
        for (double v : t.data()) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xffULL;
                h *= 0x100000001b3ULL;
            }
        }
    };
    mix(patch_weight_);
    mix(patch_bias_);
    mix(global_weight_);
    mix(global_bias_);
    for (const Tensor& t : text_weights_) mix(t);
    for (const Tensor& t : text_biases_) mix(t);
    mix(text_out_weight_);
    mix(text_out_bias_);
    mix(object_token_);
    return h;
}

std::unique_ptr<Backbone> make_backbone(const BackboneConfig& config) {
    if (config.kind == "toy") {
        return std::make_unique<ToyBackbone>(config);
    }
    throw ConfigError("unknown backbone kind '" + config.kind +
                      "'; only \"toy\" is built in, real weights need an external adapter");
}

}  // namespace faprompt
