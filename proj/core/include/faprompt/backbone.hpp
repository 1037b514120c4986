// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "faprompt/autodiff.hpp"
#include "faprompt/tensor.hpp"

namespace faprompt {

/// Output of the visual encoder: one global embedding plus a grid of patch
/// token embeddings (flattened row-major, grid_h * grid_w rows).
struct ImageEncoding {
    Tensor image_embedding;   // d
    Tensor patch_embeddings;  // l x d, l = grid_h * grid_w
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;
};

struct BackboneConfig {
    std::string kind = "toy";
    std::size_t embedding_dim = 64;      // d
    std::size_t token_dim = 64;          // d_t
    std::size_t deep_prompt_depth = 9;   // text layers that receive learnable tokens
    std::size_t deep_prompt_length = 4;  // tokens per layer
    std::size_t input_h = 518;
    std::size_t input_w = 518;
    std::size_t patch_size = 8;  // toy visual path
    std::uint64_t seed = 0;
    // External weights for real-backbone adapters (format is adapter-defined);
    // ignored by the toy backbone.
    std::string weights_path;

    void validate() const;  // throws ConfigError
};

/// Frozen vision-language encoder pair.
///
/// The image path is a plain function (no gradients are needed through a
/// frozen encoder applied to data). The text path is built on the autodiff
/// graph because prompt tokens and deep prompt tokens are the learnable
/// parameters of the whole system.
///
/// Adapter contract for real pretrained weights (not included here): an
/// implementation must (a) expose patch token embeddings taken from a
/// V-V-attention visual path starting at layer 6, reshaped to the l x d
/// contract above, and (b) accept learnable tokens prepended to each of the
/// first `deep_prompt_depth` text-encoder layers with `deep_prompt_length`
/// tokens per layer. Checkpoint format for such weights is adapter-defined;
/// the adapter is selected by BackboneConfig::kind.
class Backbone {
public:
    virtual ~Backbone() = default;

    /// image: h x w x 3, values finite, dimensions equal to the configured
    /// input size. Deterministic given the backbone weights.
    virtual ImageEncoding encode_image(const Tensor& image) const = 0;

    /// tokens: non-empty sequence of token_dim vectors; deep_prompts: a
    /// depth x length x token_dim leaf (nullopt when depth == 0). Returns an
    /// embedding_dim vector differentiable w.r.t. every input token.
    virtual Var encode_text(Graph& g, std::span<const Var> tokens,
                            std::optional<Var> deep_prompts) const = 0;

    /// Fixed embedding of the literal token "object".
    virtual const Tensor& object_token() const = 0;

    virtual const BackboneConfig& config() const = 0;
    /// Hash over all frozen weights; used to assert the backbone never trains.
    virtual std::uint64_t parameter_hash() const = 0;
};

/// Deterministic, differentiable-in-the-prompts toy backbone.
///
/// Visual path: non-overlapping patch_size x patch_size patches, each
/// flattened and passed through a fixed seeded linear layer with tanh; the
/// global embedding is a second fixed linear+tanh over the mean patch
/// embedding. Text path: the mean of the prompt tokens is mixed through
/// `deep_prompt_depth` fixed seeded tanh layers, adding the mean of that
/// layer's deep prompt tokens before each layer, then projected linearly to
/// the embedding dimension.
class ToyBackbone final : public Backbone {
public:
    explicit ToyBackbone(BackboneConfig config);

    ImageEncoding encode_image(const Tensor& image) const override;
    Var encode_text(Graph& g, std::span<const Var> tokens,
                    std::optional<Var> deep_prompts) const override;
    const Tensor& object_token() const override { return object_token_; }
    const BackboneConfig& config() const override { return config_; }
    std::uint64_t parameter_hash() const override;

    // Frozen weights, exposed so tests can re-derive outputs independently.
    const Tensor& patch_weight() const { return patch_weight_; }
    const Tensor& patch_bias() const { return patch_bias_; }
    const Tensor& global_weight() const { return global_weight_; }
    const Tensor& global_bias() const { return global_bias_; }
    const Tensor& text_layer_weight(std::size_t layer) const { return text_weights_[layer]; }
    const Tensor& text_layer_bias(std::size_t layer) const { return text_biases_[layer]; }
    const Tensor& text_out_weight() const { return text_out_weight_; }
    const Tensor& text_out_bias() const { return text_out_bias_; }

private:
    BackboneConfig config_;
    Tensor patch_weight_;   // d x (patch*patch*3)
    Tensor patch_bias_;     // d
    Tensor global_weight_;  // d x d
    Tensor global_bias_;    // d
    std::vector<Tensor> text_weights_;  // depth of d_t x d_t
    std::vector<Tensor> text_biases_;   // depth of d_t
    Tensor text_out_weight_;            // d x d_t
    Tensor text_out_bias_;              // d
    Tensor object_token_;               // d_t
};

/// Factory keyed on BackboneConfig::kind ("toy" is the only built-in).
std::unique_ptr<Backbone> make_backbone(const BackboneConfig& config);

}  // namespace faprompt
