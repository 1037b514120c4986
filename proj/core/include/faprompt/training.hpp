// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "faprompt/autodiff.hpp"
#include "faprompt/backbone.hpp"
#include "faprompt/cap.hpp"
#include "faprompt/dap.hpp"
#include "faprompt/data.hpp"
#include "faprompt/losses.hpp"
#include "faprompt/scoring.hpp"

namespace faprompt {

struct TrainConfig {
    double lr = 1e-3;
    std::size_t batch_size = 8;
    std::size_t epochs = 7;
    std::size_t input_h = 518;
    std::size_t input_w = 518;
    std::size_t num_normal = 5;    // E
    std::size_t num_abnormal = 2;  // E'
    std::size_t num_prompts = 10;  // K
    std::size_t top_m = 10;        // M
    double tau = 100.0;
    double gamma = 2.0;
    double alpha = 0.5;
    double sigma = 10.0;
    std::uint64_t seed = 0;

    FocalParams focal() const { return FocalParams{gamma, alpha}; }
    void validate() const;  // throws ConfigError
};

/// Graph handles produced by one two-pass forward evaluation of a sample.
struct ModelForward {
    ImageEncoding encoding;
    PromptEmbeddings pass1;  // prior-free
    PromptEmbeddings pass2;  // prior-refined
    Var patch_normal, patch_abnormal;                  // S^n, S^a
    Var patch_normal_refined, patch_abnormal_refined;  // prior-refined scores
    Var map_normal, map_abnormal;
    Var map_normal_refined, map_abnormal_refined;
    Var image_prob;
    Var final;
    Var omega;
    std::vector<std::size_t> prior_indices;  // top-M patch indices, descending score
};

/// Two-pass pipeline: prior-free scoring, top-M selection, prior network,
/// prior-refined scoring, maps and image-level scores. The image must match
/// the backbone input size; the sample mask is not consumed here.
ModelForward model_forward(Graph& g, const Sample& sample, const PromptBank& bank,
                           const PromptBankVars& bank_vars, const PriorNetwork& psi,
                           const PriorNetworkVars& psi_vars, const Backbone& backbone,
                           const TrainConfig& config);

/// Same pipeline with the prior-free prompt embeddings precomputed (they are
/// shared by every sample in a batch).
ModelForward model_forward(Graph& g, const Sample& sample, const PromptBank& bank,
                           const PromptBankVars& bank_vars, const PriorNetwork& psi,
                           const PriorNetworkVars& psi_vars, const Backbone& backbone,
                           const TrainConfig& config, const PromptEmbeddings& pass1);

/// Copies the forward values out of the graph.
ScoreBundle extract_bundle(const Graph& g, const ModelForward& forward);

/// Adam with bias correction; beta = (0.9, 0.999), eps = 1e-8, no decay.
class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr) : lr_(lr) {}

    /// Applies one update; `params` pairs each tensor with its gradient.
    void step(std::span<const std::pair<Tensor*, const Tensor*>> params);

private:
    double lr_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

struct Checkpoint {
    std::uint32_t format_version = 1;
    BackboneConfig backbone;
    TrainConfig train;
    PromptBank bank;
    PriorNetwork psi;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct StepRecord {
    std::size_t epoch = 0;  // 1-based
    std::size_t step = 0;   // 1-based within the run
    LossBreakdown losses;
};

/// Ablation switches; the defaults are the full model.
struct TrainOptions {
    bool use_orthogonality_loss = true;
    /// Zero-initialize psi and keep it out of the optimizer (prior is always
    /// the null vector).
    bool freeze_zero_prior = false;
};

/// Optimizes exactly {normal tokens, abnormal tokens, deep prompts, psi}
/// with Adam over seeded shuffled minibatches; the backbone and the object
/// token are never touched. `on_step` (optional) receives one record per
/// optimizer step.
Checkpoint train(const TrainConfig& config, const DatasetHandle& dataset,
                 const Backbone& backbone,
                 const std::function<void(const StepRecord&)>& on_step = nullptr,
                 const TrainOptions& options = {});

}  // namespace faprompt
