// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "faprompt/autodiff.hpp"
#include "faprompt/tensor.hpp"

namespace faprompt {

struct FocalParams {
    double gamma = 2.0;
    double alpha = 0.5;
};

/// Mean over elements of -alpha_t (1 - p_t)^gamma log(p_t), with
/// p_t = p for positive targets and 1 - p otherwise; probabilities are
/// clamped to [1e-7, 1 - 1e-7] first. Targets must be 0/1.
Var focal_loss(Graph& g, Var probs, const Tensor& targets, const FocalParams& params = {});
double focal_loss(const Tensor& probs, const Tensor& targets, const FocalParams& params = {});

/// Soft Dice loss with smoothing 1: 1 - (2 sum(p*m) + 1)/(sum p + sum m + 1).
Var dice_loss(Graph& g, Var pred_map, const Tensor& mask);
double dice_loss(const Tensor& pred_map, const Tensor& mask);

/// Pixel objective for one (normal map, abnormal map) pair against a binary
/// mask: focal over the stacked [map_n, map_a] channels vs [1-G, G], plus
/// dice(map_a, G) and dice(map_n, 1-G).
Var local_loss(Graph& g, Var map_normal, Var map_abnormal, const Tensor& mask,
               const FocalParams& params = {});
double local_loss(const Tensor& map_normal, const Tensor& map_abnormal, const Tensor& mask,
                  const FocalParams& params = {});

/// Focal loss on image-level scores against image labels, mean over batch.
Var global_loss(Graph& g, std::span<const Var> scores, std::span<const int> labels,
                const FocalParams& params = {});
double global_loss(const Tensor& scores, std::span<const int> labels,
                   const FocalParams& params = {});

struct LossBreakdown {
    double local = 0.0;
    double global = 0.0;
    double prior = 0.0;
    double oc = 0.0;
    double total = 0.0;
};

struct TotalLoss {
    Var value;
    LossBreakdown breakdown;
};

/// Unweighted sum of the four objectives; throws TrainingError naming the
/// first non-finite component.
TotalLoss total_loss(Graph& g, Var local, Var global, Var prior, Var oc);

}  // namespace faprompt
