// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "faprompt/tensor.hpp"

namespace faprompt {

enum class Split { Train, Test };

struct Sample {
    Tensor image;  // h x w x 3 in [0, 1]
    int label = 0;
    Tensor mask;  // binary h x w, same dims as image
    std::string category;
    Split split = Split::Train;
    std::string source;  // file path or synthetic identifier
};

/// Ordered view over a dataset. Iteration order is deterministic:
/// lexicographic path order for on-disk data, generation order for
/// synthetic data. Samples are materialized on demand.
class DatasetHandle {
public:
    std::size_t size() const { return entries_.size(); }
    Sample sample(std::size_t index) const;

    std::vector<std::size_t> indices(Split split) const;
    std::size_t count(Split split) const;
    std::size_t count_anomalous(Split split) const;
    const std::vector<std::string>& categories() const { return categories_; }
    const std::string& root() const { return root_; }

private:
    struct Entry {
        std::string image_path;           // empty for in-memory samples
        std::string mask_path;            // empty -> all-zero mask
        std::optional<Tensor> image;      // synthetic payload
        std::optional<Tensor> mask;       // synthetic payload
        int label = 0;
        Split split = Split::Train;
        std::string category;
        std::string source;
    };

    std::vector<Entry> entries_;
    std::vector<std::string> categories_;
    std::string root_;

    friend DatasetHandle load_dataset(const std::string& root);
    friend DatasetHandle synth_dataset(std::uint64_t seed, std::size_t n_train,
                                       std::size_t n_test, std::size_t size,
                                       double anomaly_fraction);
};

/// Loads an MVTec-style tree:
///   root/<category>/{train,test}/<defect_or_good>/*.png
///   root/<category>/ground_truth/<defect>/<stem>_mask.png
/// "good" directories are label 0 with all-zero masks; everything else is
/// label 1 and must have a mask of matching size.
DatasetHandle load_dataset(const std::string& root);

/// Seeded synthetic dataset: band-limited noise textures; anomalous samples
/// carry 1-3 contrasting rectangular/elliptic defects with exact masks that
/// never touch the 2-pixel border. floor(n * anomaly_fraction) samples of
/// each split are anomalous; both splits contain both classes.
DatasetHandle synth_dataset(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                            std::size_t size, double anomaly_fraction);

/// Writes a dataset to disk in the tree layout load_dataset expects,
/// under root/<category>/....
void materialize_dataset(const DatasetHandle& dataset, const std::string& root);

/// Bilinear image resize (h x w x 3) with half-pixel centers.
Tensor resize_image(const Tensor& image, std::size_t out_h, std::size_t out_w);

/// Nearest-neighbor mask resize; keeps masks binary.
Tensor resize_mask_nearest(const Tensor& mask, std::size_t out_h, std::size_t out_w);

}  // namespace faprompt
