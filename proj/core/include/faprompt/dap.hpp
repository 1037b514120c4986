// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "faprompt/autodiff.hpp"
#include "faprompt/tensor.hpp"

namespace faprompt {

/// Patch-level two-way softmax scores against the normal embedding and the
/// abnormality prototype. Returns (S^n, S^a); S^n + S^a == 1 exactly.
/// Cosine similarities are scaled by tau before the softmax, which is
/// evaluated as a logistic of the logit difference (equivalent to the
/// subtract-max form).
std::pair<Var, Var> patch_scores(Graph& g, const Tensor& patch_embeddings, Var normal_embedding,
                                 Var abnormal_embedding, double tau);

/// Indices (descending score, ties to the smaller index) and embeddings of
/// the M highest-scoring patches. Selection is detached: gradients flow only
/// through downstream consumers of the returned embeddings.
struct PatchSelection {
    std::vector<std::size_t> indices;
    Tensor patches;  // M x d rows in selection order
};

PatchSelection select_top_patches(const Tensor& abnormal_scores, const Tensor& patch_embeddings,
                                  std::size_t top_m);

/// Two-layer MLP mapping the concatenated top-M patch embeddings to the
/// abnormality prior: input d*M -> hidden max(1, d*M/16) with ReLU -> d_t.
struct PriorNetwork {
    Tensor w1;  // hidden x (d*M)
    Tensor b1;  // hidden
    Tensor w2;  // d_t x hidden
    Tensor b2;  // d_t

    std::size_t input_dim() const { return w1.dim(1); }
    std::size_t hidden_dim() const { return w1.dim(0); }
    std::size_t output_dim() const { return w2.dim(0); }

    static PriorNetwork init(std::size_t patch_dim, std::size_t top_m, std::size_t token_dim,
                             std::uint64_t seed);
    /// All parameters zero; the prior is identically the null vector.
    static PriorNetwork zero(std::size_t patch_dim, std::size_t top_m, std::size_t token_dim);

    std::vector<std::pair<std::string, Tensor*>> parameters();
};

struct PriorNetworkVars {
    Var w1, b1, w2, b2;
    static PriorNetworkVars attach(Graph& g, const PriorNetwork& net, bool requires_grad = true);
};

/// omega = psi(concat of patches in selection order). `patches` must be a
/// leaf/node holding exactly M rows of dimension d.
Var compute_prior(Graph& g, const PriorNetwork& net, const PriorNetworkVars& vars, Var patches);

/// Prior nulling loss: sum of squared prior entries for normal samples
/// (label 0), zero for anomalous ones.
Var prior_loss(Graph& g, Var omega, int label);

}  // namespace faprompt
