// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/dap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faprompt/errors.hpp"
#include "faprompt/rng.hpp"

namespace faprompt {

std::pair<Var, Var> patch_scores(Graph& g, const Tensor& patch_embeddings, Var normal_embedding,
                                 Var abnormal_embedding, double tau) {
    if (patch_embeddings.rank() != 2) {
        throw ValidationError("patch_scores: patch embeddings must be l x d");
    }
    Var cos_n = g.cosine_rows(patch_embeddings, normal_embedding);
    Var cos_a = g.cosine_rows(patch_embeddings, abnormal_embedding);
    // The logistic saturates to exactly 1.0 in doubles for large tau; keep
    // scores strictly inside (0,1) while preserving the exact complement.
    constexpr double kEdge = 0x1p-40;
    Var abnormal =
        g.clamp(g.sigmoid(g.affine(g.sub(cos_a, cos_n), tau, 0.0)), kEdge, 1.0 - kEdge);
    Var normal = g.affine(abnormal, -1.0, 1.0);
    return {normal, abnormal};
}

PatchSelection select_top_patches(const Tensor& abnormal_scores, const Tensor& patch_embeddings,
                                  std::size_t top_m) {
    if (abnormal_scores.rank() != 1 || patch_embeddings.rank() != 2 ||
        abnormal_scores.size() != patch_embeddings.dim(0)) {
        throw ValidationError("select_top_patches: score/embedding shape mismatch");
    }
    const std::size_t l = abnormal_scores.size();
    if (top_m == 0 || top_m > l) {
        throw ValidationError("select_top_patches: M must be in [1, patch count]");
    }

    std::vector<std::size_t> order(l);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return abnormal_scores[a] > abnormal_scores[b];
    });

    const std::size_t d = patch_embeddings.dim(1);
    PatchSelection sel;
    sel.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_m));
    sel.patches = Tensor({top_m, d});
    for (std::size_t row = 0; row < top_m; ++row) {
        for (std::size_t j = 0; j < d; ++j) {
            sel.patches(row, j) = patch_embeddings(sel.indices[row], j);
        }
    }
    return sel;
}

PriorNetwork PriorNetwork::init(std::size_t patch_dim, std::size_t top_m, std::size_t token_dim,
                                std::uint64_t seed) {
    if (patch_dim == 0 || top_m == 0 || token_dim == 0) {
        throw ValidationError("PriorNetwork: dimensions must be positive");
    }
    const std::size_t input = patch_dim * top_m;
    const std::size_t hidden = std::max<std::size_t>(1, input / 16);

    Rng rng(seed ^ 0x13579bdf2468aceULL);
    PriorNetwork net;
    net.w1 = Tensor({hidden, input});
    for (double& v : net.w1.data()) v = rng.gaussian(0.0, 1.0 / std::sqrt(static_cast<double>(input)));
    net.b1 = Tensor({hidden});
    net.w2 = Tensor({token_dim, hidden});
    for (double& v : net.w2.data()) v = rng.gaussian(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
    net.b2 = Tensor({token_dim});
    return net;
}

PriorNetwork PriorNetwork::zero(std::size_t patch_dim, std::size_t top_m, std::size_t token_dim) {
    const std::size_t input = patch_dim * top_m;
    const std::size_t hidden = std::max<std::size_t>(1, input / 16);
    PriorNetwork net;
    net.w1 = Tensor({hidden, input});
    net.b1 = Tensor({hidden});
    net.w2 = Tensor({token_dim, hidden});
    net.b2 = Tensor({token_dim});
    return net;
}

std::vector<std::pair<std::string, Tensor*>> PriorNetwork::parameters() {
    return {{"psi.w1", &w1}, {"psi.b1", &b1}, {"psi.w2", &w2}, {"psi.b2", &b2}};
}

PriorNetworkVars PriorNetworkVars::attach(Graph& g, const PriorNetwork& net, bool requires_grad) {
    return PriorNetworkVars{
        g.leaf(net.w1, requires_grad),
        g.leaf(net.b1, requires_grad),
        g.leaf(net.w2, requires_grad),
        g.leaf(net.b2, requires_grad),
    };
}

Var compute_prior(Graph& g, const PriorNetwork& net, const PriorNetworkVars& vars, Var patches) {
    const Tensor& p = g.value(patches);
    if (p.size() != net.input_dim()) {
        throw ValidationError("compute_prior: expected exactly M patch embeddings");
    }
    Var flat = p.rank() == 1 ? patches : g.reshape(patches, {p.size()});
    Var hidden = g.relu(g.add(g.matvec(vars.w1, flat), vars.b1));
    return g.add(g.matvec(vars.w2, hidden), vars.b2);
}

Var prior_loss(Graph& g, Var omega, int label) {
    if (label != 0) return g.leaf(Tensor::scalar(0.0));
    return g.sum(g.mul(omega, omega));
}

}  // namespace faprompt
