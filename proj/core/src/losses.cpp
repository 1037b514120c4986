// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "faprompt/errors.hpp"

namespace faprompt {

namespace {

constexpr double kProbEps = 1e-7;

void check_binary(const Tensor& targets, const char* op) {
    for (double t : targets.data()) {
        if (t != 0.0 && t != 1.0) {
            throw ValidationError(std::string(op) + ": targets must be binary");
        }
    }
}

}  // namespace

Var focal_loss(Graph& g, Var probs, const Tensor& targets, const FocalParams& params) {
    const Tensor& p = g.value(probs);
    if (p.size() != targets.size()) {
        throw ValidationError("focal_loss: probs/targets shape mismatch");
    }
    check_binary(targets, "focal_loss");

    // p_t = t*p + (1-t)*(1-p) = (2t-1)*p + (1-t), elementwise in the target.
    Tensor slope(p.shape());
    Tensor intercept(p.shape());
    Tensor alpha_t(p.shape());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        slope[i] = 2.0 * targets[i] - 1.0;
        intercept[i] = 1.0 - targets[i];
        alpha_t[i] = targets[i] == 1.0 ? params.alpha : 1.0 - params.alpha;
    }
    Var clamped = g.clamp(probs, kProbEps, 1.0 - kProbEps);
    Var pt = g.add(g.mul_const(clamped, std::move(slope)), g.leaf(std::move(intercept)));
    Var modulator = g.pow_const(g.affine(pt, -1.0, 1.0), params.gamma);
    Var terms = g.mul_const(g.mul(modulator, g.log_op(pt)), std::move(alpha_t));
    return g.affine(g.mean(terms), -1.0, 0.0);
}

double focal_loss(const Tensor& probs, const Tensor& targets, const FocalParams& params) {
    Graph g;
    return g.value(focal_loss(g, g.leaf(probs), targets, params))[0];
}

Var dice_loss(Graph& g, Var pred_map, const Tensor& mask) {
    const Tensor& p = g.value(pred_map);
    if (p.size() != mask.size()) throw ValidationError("dice_loss: shape mismatch");
    check_binary(mask, "dice_loss");

    constexpr double kSmooth = 1.0;
    Var intersection = g.sum(g.mul_const(pred_map, mask));
    Var numerator = g.affine(intersection, 2.0, kSmooth);
    Var denominator = g.affine(g.sum(pred_map), 1.0, mask.sum() + kSmooth);
    return g.affine(g.div(numerator, denominator), -1.0, 1.0);
}

double dice_loss(const Tensor& pred_map, const Tensor& mask) {
    Graph g;
    return g.value(dice_loss(g, g.leaf(pred_map), mask))[0];
}

Var local_loss(Graph& g, Var map_normal, Var map_abnormal, const Tensor& mask,
               const FocalParams& params) {
    const Tensor& mn = g.value(map_normal);
    const Tensor& ma = g.value(map_abnormal);
    if (mn.size() != mask.size() || ma.size() != mask.size()) {
        throw ValidationError("local_loss: map/mask shape mismatch");
    }
    check_binary(mask, "local_loss");

    Tensor inverse(mask.shape());
    for (std::size_t i = 0; i < mask.size(); ++i) inverse[i] = 1.0 - mask[i];

    std::vector<Var> channels = {map_normal, map_abnormal};
    Var stacked = g.concat(channels);
    Tensor stacked_targets({2 * mask.size()});
    for (std::size_t i = 0; i < mask.size(); ++i) {
        stacked_targets[i] = inverse[i];
        stacked_targets[mask.size() + i] = mask[i];
    }

    Var focal = focal_loss(g, stacked, stacked_targets, params);
    Var dice_abnormal = dice_loss(g, map_abnormal, mask);
    Var dice_normal = dice_loss(g, map_normal, inverse);
    return g.add(focal, g.add(dice_abnormal, dice_normal));
}

double local_loss(const Tensor& map_normal, const Tensor& map_abnormal, const Tensor& mask,
                  const FocalParams& params) {
    Graph g;
    return g.value(local_loss(g, g.leaf(map_normal), g.leaf(map_abnormal), mask, params))[0];
}

Var global_loss(Graph& g, std::span<const Var> scores, std::span<const int> labels,
                const FocalParams& params) {
    if (scores.empty()) throw ValidationError("global_loss: empty batch");
    if (scores.size() != labels.size()) {
        throw ValidationError("global_loss: score/label count mismatch");
    }
    Var batch = g.concat(scores);
    Tensor targets({scores.size()});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        targets[i] = labels[i] == 0 ? 0.0 : 1.0;
    }
    return focal_loss(g, batch, targets, params);
}

double global_loss(const Tensor& scores, std::span<const int> labels, const FocalParams& params) {
    if (scores.empty()) throw ValidationError("global_loss: empty batch");
    Graph g;
    std::vector<Var> vars;
    vars.reserve(scores.size());
    Var all = g.leaf(scores);
    for (std::size_t i = 0; i < scores.size(); ++i) vars.push_back(g.subvector(all, i, 1));
    return g.value(global_loss(g, vars, labels, params))[0];
}

TotalLoss total_loss(Graph& g, Var local, Var global, Var prior, Var oc) {
    const struct {
        const char* name;
        Var v;
    } parts[] = {{"local", local}, {"global", global}, {"prior", prior}, {"oc", oc}};
    for (const auto& part : parts) {
        const Tensor& t = g.value(part.v);
        if (t.size() != 1 || !t.all_finite()) {
            throw TrainingError(std::string("total_loss: non-finite ") + part.name +
                                " component");
        }
    }
    TotalLoss out;
    out.value = g.add(g.add(g.add(local, global), prior), oc);
    out.breakdown.local = g.value(local)[0];
    out.breakdown.global = g.value(global)[0];
    out.breakdown.prior = g.value(prior)[0];
    out.breakdown.oc = g.value(oc)[0];
    out.breakdown.total = g.value(out.value)[0];
    return out;
}

}  // namespace faprompt
