// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "faprompt/tensor.hpp"

namespace faprompt {

struct EvalReport {
    double image_auroc = 0.0;
    double image_ap = 0.0;
    double pixel_auroc = 0.0;
    double pixel_pro = 0.0;
    std::size_t n_images = 0;
    std::size_t n_anomalous = 0;
};

/// Mann-Whitney AUROC with tie correction: the mean over (positive,
/// negative) pairs of [s_p > s_n] + 1/2 [s_p == s_n]. Throws MetricError
/// unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Average precision over descending-score thresholds placed at each
/// distinct score (ties grouped): sum_k (R_k - R_{k-1}) P_k. Throws
/// MetricError when there is no positive.
double average_precision(std::span<const double> scores, std::span<const int> labels);

/// Per-region overlap integrated over the false-positive-rate axis.
///
/// Thresholds sweep the distinct score values descending with the strict
/// predicate score > t, so the lowest threshold never predicts everything.
/// At each threshold the mean recall over 8-connected mask regions (pooled
/// across images) is paired with the global FPR over normal pixels; points
/// sharing an FPR keep the best overlap, the curve is extended at its final
/// overlap beyond the last point, and the trapezoidal area up to fpr_limit
/// is normalized by fpr_limit. Throws MetricError when no mask has any
/// anomalous pixel.
double pro(std::span<const Tensor> score_maps, std::span<const Tensor> masks,
           double fpr_limit = 0.3);

/// 8-connected components of a binary mask; each component is a list of
/// flat pixel indices. Exposed for tests and tooling.
std::vector<std::vector<std::size_t>> connected_components(const Tensor& mask);

}  // namespace faprompt
