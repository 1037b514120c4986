// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/cap.hpp"

#include "faprompt/errors.hpp"
#include "faprompt/rng.hpp"

namespace faprompt {

bool PromptBank::has_deep_prompts() const { return !deep_prompts.empty(); }

PromptBank PromptBank::init(const Backbone& backbone, std::size_t num_normal,
                            std::size_t num_abnormal, std::size_t num_prompts,
                            std::uint64_t seed) {
    if (num_normal == 0 || num_abnormal == 0 || num_prompts == 0) {
        throw ValidationError("PromptBank: E, E' and K must all be at least 1");
    }
    const BackboneConfig& cfg = backbone.config();
    const std::size_t dt = cfg.token_dim;

    PromptBank bank;
    bank.num_normal = num_normal;
    bank.num_abnormal = num_abnormal;
    bank.num_prompts = num_prompts;
    bank.object_token = backbone.object_token();

    Rng rng(seed ^ 0xa2b4c6d8e0f12345ULL);
    bank.normal_tokens = Tensor({num_normal, dt});
    for (double& v : bank.normal_tokens.data()) v = rng.gaussian(0.0, 0.02);
    bank.abnormal_tokens = Tensor({num_prompts, num_abnormal, dt});
    for (double& v : bank.abnormal_tokens.data()) v = rng.gaussian(0.0, 0.02);

    if (cfg.deep_prompt_depth > 0 && cfg.deep_prompt_length > 0) {
        bank.deep_prompts = Tensor({cfg.deep_prompt_depth, cfg.deep_prompt_length, dt});
        for (double& v : bank.deep_prompts.data()) v = rng.gaussian(0.0, 0.02);
    }
    return bank;
}

std::vector<std::pair<std::string, Tensor*>> PromptBank::parameters() {
    std::vector<std::pair<std::string, Tensor*>> params = {
        {"cap.normal_tokens", &normal_tokens},
        {"cap.abnormal_tokens", &abnormal_tokens},
    };
    if (has_deep_prompts()) params.emplace_back("cap.deep_prompts", &deep_prompts);
    return params;
}

void PromptBank::validate() const {
    if (num_normal == 0 || num_abnormal == 0 || num_prompts == 0) {
        throw ValidationError("PromptBank: E, E' and K must all be at least 1");
    }
    if (!normal_tokens.all_finite() || !abnormal_tokens.all_finite() ||
        !object_token.all_finite() || (has_deep_prompts() && !deep_prompts.all_finite())) {
        throw ValidationError("PromptBank: non-finite token values");
    }
}

PromptBankVars PromptBankVars::attach(Graph& g, const PromptBank& bank, bool requires_grad) {
    PromptBankVars vars;
    vars.normal_tokens = g.leaf(bank.normal_tokens, requires_grad);
    vars.abnormal_tokens = g.leaf(bank.abnormal_tokens, requires_grad);
    vars.object_token = g.leaf(bank.object_token, false);
    if (bank.has_deep_prompts()) {
        vars.deep_prompts = g.leaf(bank.deep_prompts, requires_grad);
    }
    return vars;
}

AssembledPrompts assemble_prompts(Graph& g, const PromptBankVars& vars, const PromptBank& bank,
                                  std::optional<Var> omega) {
    const std::size_t dt = bank.object_token.size();
    if (omega.has_value() && g.value(*omega).size() != dt) {
        throw ValidationError("assemble_prompts: prior dimension does not match token dimension");
    }

    AssembledPrompts out;
    std::vector<Var> normal_rows;
    normal_rows.reserve(bank.num_normal);
    for (std::size_t e = 0; e < bank.num_normal; ++e) {
        normal_rows.push_back(g.subvector(vars.normal_tokens, e * dt, dt));
    }

    out.normal = normal_rows;
    out.normal.push_back(vars.object_token);

    out.abnormal.reserve(bank.num_prompts);
    for (std::size_t i = 0; i < bank.num_prompts; ++i) {
        std::vector<Var> seq = normal_rows;
        for (std::size_t e = 0; e < bank.num_abnormal; ++e) {
            Var token =
                g.subvector(vars.abnormal_tokens, (i * bank.num_abnormal + e) * dt, dt);
            if (omega.has_value()) token = g.add(token, *omega);
            seq.push_back(token);
        }
        seq.push_back(vars.object_token);
        out.abnormal.push_back(std::move(seq));
    }
    return out;
}

PromptEmbeddings encode_prompt_bank(Graph& g, const PromptBankVars& vars, const PromptBank& bank,
                                    const Backbone& backbone, std::optional<Var> omega) {
    const AssembledPrompts prompts = assemble_prompts(g, vars, bank, omega);

    PromptEmbeddings out;
    out.prior_used = omega.has_value();
    out.normal = backbone.encode_text(g, prompts.normal, vars.deep_prompts);
    out.per_prompt.reserve(prompts.abnormal.size());
    for (const auto& seq : prompts.abnormal) {
        out.per_prompt.push_back(backbone.encode_text(g, seq, vars.deep_prompts));
    }
    out.prototype = g.mean_vectors(out.per_prompt);
    return out;
}

Var orthogonality_loss(Graph& g, std::span<const Var> per_prompt) {
    if (per_prompt.empty()) throw ValidationError("orthogonality_loss: no prompt embeddings");
    for (Var v : per_prompt) {
        if (g.value(v).norm() == 0.0) {
            throw ValidationError("orthogonality_loss: zero-norm prompt embedding");
        }
    }
    Var total = g.leaf(Tensor::scalar(0.0));
    for (std::size_t i = 0; i < per_prompt.size(); ++i) {
        for (std::size_t j = i + 1; j < per_prompt.size(); ++j) {
            Var num = g.dot(per_prompt[i], per_prompt[j]);
            Var den = g.sqrt_op(g.mul(g.dot(per_prompt[i], per_prompt[i]),
                                      g.dot(per_prompt[j], per_prompt[j])));
            total = g.add(total, g.abs_op(g.div(num, den)));
        }
    }
    return total;
}

double orthogonality_loss(const Tensor& per_prompt) {
    if (per_prompt.rank() != 2) {
        throw ValidationError("orthogonality_loss: expected a K x d matrix");
    }
    Graph g;
    std::vector<Var> rows;
    const std::size_t d = per_prompt.dim(1);
    Var m = g.leaf(per_prompt);
    for (std::size_t i = 0; i < per_prompt.dim(0); ++i) {
        rows.push_back(g.subvector(m, i * d, d));
    }
    return g.value(orthogonality_loss(g, rows))[0];
}

}  // namespace faprompt
