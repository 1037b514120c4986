// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "faprompt/autodiff.hpp"
#include "faprompt/tensor.hpp"

namespace faprompt {

/// Patch scores and segmentation maps for one image. Score vectors are at
/// grid resolution, maps at image resolution. All values lie in [0, 1];
/// normal/abnormal pairs are exact complements at grid points.
struct ScoreBundle {
    Tensor patch_normal;            // S^n
    Tensor patch_abnormal;          // S^a
    Tensor patch_normal_refined;    // prior-refined S^n
    Tensor patch_abnormal_refined;  // prior-refined S^a
    Tensor map_normal;
    Tensor map_abnormal;
    Tensor map_normal_refined;
    Tensor map_abnormal_refined;
    double image_probability = 0.0;  // global softmax score
    double final_score = 0.0;        // fused image-level anomaly score
};

/// Reshape a flattened grid of patch scores and bilinearly upsample it to
/// out_h x out_w (half-pixel centers). Linear in the scores.
Var to_segmentation_map(Graph& g, Var scores, std::size_t grid_h, std::size_t grid_w,
                        std::size_t out_h, std::size_t out_w);
Tensor to_segmentation_map(const Tensor& scores, std::size_t grid_h, std::size_t grid_w,
                           std::size_t out_h, std::size_t out_w);

/// Image-level anomaly probability: two-way softmax over tau-scaled cosine
/// similarities of the image embedding to the normal and (refined) abnormal
/// prompt embeddings.
Var image_probability(Graph& g, const Tensor& image_embedding, Var normal_embedding,
                      Var abnormal_embedding, double tau);

/// s = 1/2 (s_a + 1/2 (max S^a + max S_hat^a)).
Var final_score(Graph& g, Var image_prob, Var patch_abnormal, Var patch_abnormal_refined);
double final_score(double image_prob, const Tensor& patch_abnormal,
                   const Tensor& patch_abnormal_refined);

/// Fused inference map: 1/4 (M^a + (1 - M^n) + M_hat^a + (1 - M_hat^n)).
Tensor inference_map(const Tensor& map_abnormal, const Tensor& map_normal,
                     const Tensor& map_abnormal_refined, const Tensor& map_normal_refined);

/// Separable Gaussian blur, kernel radius ceil(3*sigma), reflect padding,
/// kernel normalized to sum 1. Constant maps are unchanged.
Tensor gaussian_smooth(const Tensor& map, double sigma);

}  // namespace faprompt
