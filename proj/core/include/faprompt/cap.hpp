// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faprompt/autodiff.hpp"
#include "faprompt/backbone.hpp"
#include "faprompt/tensor.hpp"

namespace faprompt {

/// All learnable prompt parameters plus the fixed object token.
///
/// The normal tokens are shared verbatim between the normal prompt and every
/// abnormality prompt, so gradients from all of them accumulate into the
/// same tensors.
struct PromptBank {
    Tensor normal_tokens;    // E x d_t, learnable
    Tensor abnormal_tokens;  // K x E' x d_t, learnable
    Tensor object_token;     // d_t, fixed
    Tensor deep_prompts;     // depth x length x d_t, learnable; empty when depth or length is 0
    std::size_t num_normal = 0;    // E
    std::size_t num_abnormal = 0;  // E'
    std::size_t num_prompts = 0;   // K

    bool has_deep_prompts() const;

    /// Gaussian init (mean 0, std 0.02) for all learnable tokens; the object
    /// token comes from the backbone.
    static PromptBank init(const Backbone& backbone, std::size_t num_normal,
                           std::size_t num_abnormal, std::size_t num_prompts,
                           std::uint64_t seed);

    /// Named views over the learnable tensors, checkpoint/optimizer order.
    std::vector<std::pair<std::string, Tensor*>> parameters();

    void validate() const;  // throws ValidationError
};

/// Graph leaves for one optimization step over a PromptBank snapshot.
struct PromptBankVars {
    Var normal_tokens;
    Var abnormal_tokens;
    Var object_token;                 // no grad
    std::optional<Var> deep_prompts;  // absent when the bank has none

    static PromptBankVars attach(Graph& g, const PromptBank& bank, bool requires_grad = true);
};

/// Token sequences for the normal prompt and the K abnormality prompts.
struct AssembledPrompts {
    std::vector<Var> normal;                 // E + 1 tokens
    std::vector<std::vector<Var>> abnormal;  // K sequences of E + E' + 1 tokens
};

/// Builds [V_1..V_E, object] and, per prompt i, [V_1..V_E, A^i_1 + omega, ...,
/// A^i_E' + omega, object]. A missing omega means no addition at all.
AssembledPrompts assemble_prompts(Graph& g, const PromptBankVars& vars, const PromptBank& bank,
                                  std::optional<Var> omega = std::nullopt);

/// Encoded prompt embeddings; prototype is the mean of the per-prompt rows.
struct PromptEmbeddings {
    Var normal;                   // F_n
    std::vector<Var> per_prompt;  // f_t of each abnormality prompt
    Var prototype;                // F_a (or the prior-refined version)
    bool prior_used = false;
};

PromptEmbeddings encode_prompt_bank(Graph& g, const PromptBankVars& vars, const PromptBank& bank,
                                    const Backbone& backbone,
                                    std::optional<Var> omega = std::nullopt);

/// Sum over unordered prompt pairs of |cosine|; zero when K == 1.
/// Throws ValidationError on a zero-norm embedding.
Var orthogonality_loss(Graph& g, std::span<const Var> per_prompt);

/// Convenience overload for plain matrices (rows are prompt embeddings).
double orthogonality_loss(const Tensor& per_prompt);

}  // namespace faprompt
