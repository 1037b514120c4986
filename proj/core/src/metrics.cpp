// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/metrics.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>

#include "faprompt/errors.hpp"

namespace faprompt {

double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw ValidationError("auroc: score/label size mismatch");
    }
    std::size_t positives = 0;
    for (int y : labels) positives += (y != 0);
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw MetricError("auroc: both classes must be present");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Rank sum of positives with mean ranks over tie groups; equivalent to
    // the pairwise [s_p > s_n] + 1/2 [s_p == s_n] statistic.
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) positive_rank_sum += mean_rank;
        }
        i = j;
    }
    const double p = static_cast<double>(positives);
    const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw ValidationError("average_precision: score/label size mismatch");
    }
    std::size_t positives = 0;
    for (int y : labels) positives += (y != 0);
    if (positives == 0) throw MetricError("average_precision: no positive samples");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    double previous_recall = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) {
                ++tp;
            } else {
                ++fp;
            }
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - previous_recall) * precision;
        previous_recall = recall;
        i = j;
    }
    return ap;
}

std::vector<std::vector<std::size_t>> connected_components(const Tensor& mask) {
    if (mask.rank() != 2) throw ValidationError("connected_components: expected an h x w mask");
    const long long h = static_cast<long long>(mask.dim(0));
    const long long w = static_cast<long long>(mask.dim(1));

    std::vector<std::vector<std::size_t>> components;
    std::vector<char> visited(static_cast<std::size_t>(h * w), 0);
    std::vector<std::size_t> stack;
    for (long long y = 0; y < h; ++y) {
        for (long long x = 0; x < w; ++x) {
            const std::size_t start = static_cast<std::size_t>(y * w + x);
            if (visited[start] || mask[start] == 0.0) continue;
            std::vector<std::size_t> component;
            stack.assign(1, start);
            visited[start] = 1;
            while (!stack.empty()) {
                const std::size_t px = stack.back();
                stack.pop_back();
                component.push_back(px);
                const long long cy = static_cast<long long>(px) / w;
                const long long cx = static_cast<long long>(px) % w;
                for (long long dy = -1; dy <= 1; ++dy) {
                    for (long long dx = -1; dx <= 1; ++dx) {
                        if (dy == 0 && dx == 0) continue;
                        const long long ny = cy + dy;
                        const long long nx = cx + dx;
                        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                        const std::size_t npx = static_cast<std::size_t>(ny * w + nx);
                        if (!visited[npx] && mask[npx] != 0.0) {
                            visited[npx] = 1;
                            stack.push_back(npx);
                        }
                    }
                }
            }
            std::sort(component.begin(), component.end());
            components.push_back(std::move(component));
        }
    }
    return components;
}

double pro(std::span<const Tensor> score_maps, std::span<const Tensor> masks, double fpr_limit) {
    if (score_maps.size() != masks.size() || score_maps.empty()) {
        throw ValidationError("pro: map/mask count mismatch");
    }
    if (fpr_limit <= 0.0 || fpr_limit > 1.0) {
        throw ValidationError("pro: fpr_limit must be in (0, 1]");
    }

    // Each anomalous region contributes its pixel scores; normal pixels are
    // pooled globally for the FPR axis.
    std::vector<std::vector<double>> region_scores;  // sorted descending later
    std::vector<double> normal_scores;
    std::vector<double> all_scores;
    for (std::size_t m = 0; m < masks.size(); ++m) {
        const Tensor& mask = masks[m];
        const Tensor& map = score_maps[m];
        if (!mask.same_shape(map)) throw ValidationError("pro: map/mask shape mismatch");
        for (auto& component : connected_components(mask)) {
            std::vector<double> scores;
            scores.reserve(component.size());
            for (std::size_t px : component) scores.push_back(map[px]);
            region_scores.push_back(std::move(scores));
        }
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i] == 0.0) normal_scores.push_back(map[i]);
            all_scores.push_back(map[i]);
        }
    }
    if (region_scores.empty()) throw MetricError("pro: no anomalous region in any mask");

    std::sort(all_scores.begin(), all_scores.end(), std::greater<>());
    all_scores.erase(std::unique(all_scores.begin(), all_scores.end()), all_scores.end());
    for (auto& scores : region_scores) std::sort(scores.begin(), scores.end(), std::greater<>());
    std::sort(normal_scores.begin(), normal_scores.end(), std::greater<>());

    const double region_count = static_cast<double>(region_scores.size());
    const double normal_count = static_cast<double>(normal_scores.size());

    // Walk thresholds descending; counters track pixels with score > t.
    // Points sharing an FPR collapse to the best overlap (the sweep only
    // ever raises it), so the curve is built before any integration.
    std::vector<std::size_t> region_cursor(region_scores.size(), 0);
    std::size_t normal_cursor = 0;
    double recall_sum = 0.0;

    std::vector<std::pair<double, double>> curve;  // (fpr, overlap)
    for (double t : all_scores) {
        for (std::size_t r = 0; r < region_scores.size(); ++r) {
            const auto& scores = region_scores[r];
            std::size_t& cursor = region_cursor[r];
            while (cursor < scores.size() && scores[cursor] > t) {
                recall_sum += 1.0 / static_cast<double>(scores.size());
                ++cursor;
            }
        }
        while (normal_cursor < normal_scores.size() && normal_scores[normal_cursor] > t) {
            ++normal_cursor;
        }
        const double overlap = recall_sum / region_count;
        const double fpr =
            normal_count == 0.0 ? 0.0 : static_cast<double>(normal_cursor) / normal_count;
        if (!curve.empty() && curve.back().first == fpr) {
            curve.back().second = overlap;
        } else if (curve.size() >= 2 && curve.back().first >= fpr_limit) {
            break;  // already past the limit with a settled interpolation segment
        } else {
            curve.emplace_back(fpr, overlap);
        }
    }

    double area = 0.0;
    double prev_fpr = curve.front().first;
    double prev_overlap = curve.front().second;
    for (std::size_t i = 1; i < curve.size() && prev_fpr < fpr_limit; ++i) {
        const auto [fpr, overlap] = curve[i];
        if (fpr >= fpr_limit) {
            const double at_limit =
                prev_overlap + (overlap - prev_overlap) * (fpr_limit - prev_fpr) / (fpr - prev_fpr);
            area += 0.5 * (prev_overlap + at_limit) * (fpr_limit - prev_fpr);
            prev_fpr = fpr_limit;
            prev_overlap = at_limit;
            break;
        }
        area += 0.5 * (prev_overlap + overlap) * (fpr - prev_fpr);
        prev_fpr = fpr;
        prev_overlap = overlap;
    }
    if (prev_fpr < fpr_limit) {
        // Flat extension at the final overlap out to the integration limit.
        area += prev_overlap * (fpr_limit - prev_fpr);
    }
    return area / fpr_limit;
}

}  // namespace faprompt
