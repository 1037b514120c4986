// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/scoring.hpp"

#include <cmath>
#include <vector>

#include "faprompt/errors.hpp"

namespace faprompt {

Var to_segmentation_map(Graph& g, Var scores, std::size_t grid_h, std::size_t grid_w,
                        std::size_t out_h, std::size_t out_w) {
    const Tensor& s = g.value(scores);
    if (s.size() != grid_h * grid_w) {
        throw ValidationError("to_segmentation_map: score count does not match grid shape");
    }
    return g.bilinear_resize(scores, grid_h, grid_w, out_h, out_w);
}

Tensor to_segmentation_map(const Tensor& scores, std::size_t grid_h, std::size_t grid_w,
                           std::size_t out_h, std::size_t out_w) {
    Graph g;
    Var v = g.leaf(scores);
    return g.value(to_segmentation_map(g, v, grid_h, grid_w, out_h, out_w));
}

Var image_probability(Graph& g, const Tensor& image_embedding, Var normal_embedding,
                      Var abnormal_embedding, double tau) {
    if (image_embedding.rank() != 1) {
        throw ValidationError("image_probability: image embedding must be a vector");
    }
    Tensor row({1, image_embedding.size()});
    for (std::size_t i = 0; i < image_embedding.size(); ++i) row(0, i) = image_embedding[i];
    Var cos_n = g.cosine_rows(row, normal_embedding);
    Var cos_a = g.cosine_rows(row, abnormal_embedding);
    constexpr double kEdge = 0x1p-40;  // keep the probability strictly inside (0,1)
    return g.clamp(g.sigmoid(g.affine(g.sub(cos_a, cos_n), tau, 0.0)), kEdge, 1.0 - kEdge);
}

Var final_score(Graph& g, Var image_prob, Var patch_abnormal, Var patch_abnormal_refined) {
    if (g.value(patch_abnormal).size() == 0 || g.value(patch_abnormal_refined).size() == 0) {
        throw ValidationError("final_score: empty patch score vector");
    }
    Var patch_part =
        g.affine(g.add(g.max(patch_abnormal), g.max(patch_abnormal_refined)), 0.5, 0.0);
    return g.affine(g.add(image_prob, patch_part), 0.5, 0.0);
}

double final_score(double image_prob, const Tensor& patch_abnormal,
                   const Tensor& patch_abnormal_refined) {
    if (patch_abnormal.empty() || patch_abnormal_refined.empty()) {
        throw ValidationError("final_score: empty patch score vector");
    }
    return 0.5 * (image_prob + 0.5 * (patch_abnormal.max() + patch_abnormal_refined.max()));
}

Tensor inference_map(const Tensor& map_abnormal, const Tensor& map_normal,
                     const Tensor& map_abnormal_refined, const Tensor& map_normal_refined) {
    if (!map_abnormal.same_shape(map_normal) || !map_abnormal.same_shape(map_abnormal_refined) ||
        !map_abnormal.same_shape(map_normal_refined)) {
        throw ValidationError("inference_map: map shapes differ");
    }
    Tensor out(map_abnormal.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.25 * (map_abnormal[i] + (1.0 - map_normal[i]) + map_abnormal_refined[i] +
                         (1.0 - map_normal_refined[i]));
    }
    return out;
}

namespace {

// Mirror index into [0, n), half-sample symmetric (…, 1, 0 | 0, 1, …).
std::size_t reflect_index(long long i, long long n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return static_cast<std::size_t>(i);
}

}  // namespace

Tensor gaussian_smooth(const Tensor& map, double sigma) {
    if (sigma <= 0.0) throw ValidationError("gaussian_smooth: sigma must be positive");
    if (map.rank() != 2) throw ValidationError("gaussian_smooth: expected an h x w map");

    const long long radius = static_cast<long long>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (long long k = -radius; k <= radius; ++k) {
        const double w = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(k + radius)] = w;
        total += w;
    }
    for (double& w : kernel) w /= total;

    const long long h = static_cast<long long>(map.dim(0));
    const long long w = static_cast<long long>(map.dim(1));

    Tensor horizontal(map.shape());
    for (long long y = 0; y < h; ++y) {
        for (long long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long long k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       map[static_cast<std::size_t>(y * w) + reflect_index(x + k, w)];
            }
            horizontal[static_cast<std::size_t>(y * w + x)] = acc;
        }
    }
    Tensor out(map.shape());
    for (long long y = 0; y < h; ++y) {
        for (long long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long long k = -radius; k <= radius; ++k) {
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       horizontal[reflect_index(y + k, h) * static_cast<std::size_t>(w) +
                                  static_cast<std::size_t>(x)];
            }
            out[static_cast<std::size_t>(y * w + x)] = acc;
        }
    }
    return out;
}

}  // namespace faprompt
