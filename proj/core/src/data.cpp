// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "faprompt/errors.hpp"
#include "faprompt/png_io.hpp"
#include "faprompt/rng.hpp"

namespace fs = std::filesystem;

namespace faprompt {

Sample DatasetHandle::sample(std::size_t index) const {
    if (index >= entries_.size()) throw ValidationError("DatasetHandle: index out of range");
    const Entry& entry = entries_[index];

    Sample out;
    out.label = entry.label;
    out.split = entry.split;
    out.category = entry.category;
    out.source = entry.source;

    if (entry.image.has_value()) {
        out.image = *entry.image;
        out.mask = *entry.mask;
        return out;
    }

    out.image = read_rgb_png(entry.image_path);
    if (!entry.mask_path.empty()) {
        out.mask = read_mask_png(entry.mask_path);
        if (out.mask.dim(0) != out.image.dim(0) || out.mask.dim(1) != out.image.dim(1)) {
            throw IngestionError("mask size does not match image for '" + entry.image_path + "'");
        }
    } else {
        out.mask = Tensor({out.image.dim(0), out.image.dim(1)});
    }
    return out;
}

std::vector<std::size_t> DatasetHandle::indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].split == split) out.push_back(i);
    }
    return out;
}

std::size_t DatasetHandle::count(Split split) const { return indices(split).size(); }

std::size_t DatasetHandle::count_anomalous(Split split) const {
    std::size_t n = 0;
    for (const Entry& e : entries_) {
        if (e.split == split && e.label != 0) ++n;
    }
    return n;
}

namespace {

std::vector<fs::path> sorted_children(const fs::path& dir, bool dirs) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (dirs == entry.is_directory()) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

DatasetHandle load_dataset(const std::string& root) {
    if (!fs::exists(root) || !fs::is_directory(root)) {
        throw IngestionError("dataset root '" + root + "' does not exist");
    }

    DatasetHandle handle;
    handle.root_ = root;

    for (const fs::path& category_dir : sorted_children(root, /*dirs=*/true)) {
        const std::string category = category_dir.filename().string();
        handle.categories_.push_back(category);
        for (const auto& [split_name, split] :
             {std::pair{std::string("train"), Split::Train},
              std::pair{std::string("test"), Split::Test}}) {
            for (const fs::path& kind_dir : sorted_children(category_dir / split_name, true)) {
                const std::string kind = kind_dir.filename().string();
                const bool good = kind == "good";
                for (const fs::path& file : sorted_children(kind_dir, /*dirs=*/false)) {
                    if (file.extension() != ".png") continue;
                    DatasetHandle::Entry entry;
                    entry.image_path = file.string();
                    entry.label = good ? 0 : 1;
                    entry.split = split;
                    entry.category = category;
                    entry.source = file.string();

                    const auto image_dims = read_png_size(entry.image_path);
                    if (!good) {
                        const fs::path mask = category_dir / "ground_truth" / kind /
                                              (file.stem().string() + "_mask.png");
                        if (!fs::exists(mask)) {
                            throw IngestionError("anomalous image '" + file.string() +
                                                 "' has no mask at '" + mask.string() + "'");
                        }
                        entry.mask_path = mask.string();
                        if (read_png_size(entry.mask_path) != image_dims) {
                            throw IngestionError("mask size does not match image for '" +
                                                 file.string() + "'");
                        }
                    }
                    handle.entries_.push_back(std::move(entry));
                }
            }
        }
    }
    if (handle.entries_.empty()) {
        throw IngestionError("dataset root '" + root + "' contains no images");
    }
    return handle;
}

namespace {

// Coarse value-noise grid upsampled bilinearly gives a band-limited texture.
Tensor synth_texture(Rng& rng, std::size_t size) {
    const std::size_t coarse = std::max<std::size_t>(3, size / 8);
    Tensor grid({coarse, coarse});
    for (double& v : grid.data()) v = rng.uniform(0.3, 0.7);

    const double tint[3] = {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                            rng.uniform(-0.05, 0.05)};

    Tensor image({size, size, 3});
    for (std::size_t y = 0; y < size; ++y) {
        double sy = (static_cast<double>(y) + 0.5) * static_cast<double>(coarse) /
                        static_cast<double>(size) -
                    0.5;
        sy = std::min(std::max(sy, 0.0), static_cast<double>(coarse - 1));
        const std::size_t y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, coarse - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < size; ++x) {
            double sx = (static_cast<double>(x) + 0.5) * static_cast<double>(coarse) /
                            static_cast<double>(size) -
                        0.5;
            sx = std::min(std::max(sx, 0.0), static_cast<double>(coarse - 1));
            const std::size_t x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, coarse - 1);
            const double fx = sx - static_cast<double>(x0);
            const double base = (1.0 - fy) * ((1.0 - fx) * grid(y0, x0) + fx * grid(y0, x1)) +
                                fy * ((1.0 - fx) * grid(y1, x0) + fx * grid(y1, x1));
            for (std::size_t c = 0; c < 3; ++c) {
                image(y, x, c) = std::min(1.0, std::max(0.0, base + tint[c]));
            }
        }
    }
    return image;
}

void inject_defects(Rng& rng, Tensor& image, Tensor& mask) {
    const std::size_t size = image.dim(0);
    const std::size_t margin = 2;  // defects never touch the 2-pixel border
    const std::size_t lo = margin;
    const std::size_t hi = size - margin - 1;

    const std::size_t n_defects = 1 + rng.below(3);
    for (std::size_t d = 0; d < n_defects; ++d) {
        const bool ellipse = rng.uniform() < 0.5;
        const double min_half = std::max<double>(2.0, static_cast<double>(size) / 16.0);
        const double max_half = std::max(min_half + 1.0, static_cast<double>(size) / 6.0);
        const double half_y = rng.uniform(min_half, max_half);
        const double half_x = rng.uniform(min_half, max_half);
        const double cy = rng.uniform(static_cast<double>(lo) + half_y,
                                      static_cast<double>(hi) - half_y);
        const double cx = rng.uniform(static_cast<double>(lo) + half_x,
                                      static_cast<double>(hi) - half_x);
        const double shift = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.35, 0.55);

        const std::size_t y_begin = static_cast<std::size_t>(std::ceil(cy - half_y));
        const std::size_t y_end = static_cast<std::size_t>(std::floor(cy + half_y));
        const std::size_t x_begin = static_cast<std::size_t>(std::ceil(cx - half_x));
        const std::size_t x_end = static_cast<std::size_t>(std::floor(cx + half_x));
        for (std::size_t y = y_begin; y <= y_end; ++y) {
            for (std::size_t x = x_begin; x <= x_end; ++x) {
                if (ellipse) {
                    const double dy = (static_cast<double>(y) - cy) / half_y;
                    const double dx = (static_cast<double>(x) - cx) / half_x;
                    if (dy * dy + dx * dx > 1.0) continue;
                }
                mask(y, x) = 1.0;
                for (std::size_t c = 0; c < 3; ++c) {
                    image(y, x, c) = std::min(1.0, std::max(0.0, image(y, x, c) + shift));
                }
            }
        }
    }
}

}  // namespace

DatasetHandle synth_dataset(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                            std::size_t size, double anomaly_fraction) {
    if (size < 16) throw ValidationError("synth_dataset: size must be at least 16");
    if (!(anomaly_fraction > 0.0 && anomaly_fraction < 1.0)) {
        throw ValidationError("synth_dataset: anomaly_fraction must be in (0, 1)");
    }
    if (n_train == 0 || n_test == 0) {
        throw ValidationError("synth_dataset: split sizes must be positive");
    }

    DatasetHandle handle;
    handle.root_ = "synthetic://" + std::to_string(seed);
    handle.categories_.push_back("synthetic");

    Rng rng(seed ^ 0x5ca1ab1e0ddba11ULL);
    for (const auto& [prefix, split, n] :
         {std::tuple{std::string("train"), Split::Train, n_train},
          std::tuple{std::string("test"), Split::Test, n_test}}) {
        const std::size_t n_anomalous =
            static_cast<std::size_t>(std::floor(static_cast<double>(n) * anomaly_fraction));
        for (std::size_t i = 0; i < n; ++i) {
            const bool anomalous = i < n_anomalous;
            DatasetHandle::Entry entry;
            entry.image = synth_texture(rng, size);
            entry.mask = Tensor({size, size});
            if (anomalous) inject_defects(rng, *entry.image, *entry.mask);
            entry.label = anomalous ? 1 : 0;
            entry.split = split;
            entry.category = "synthetic";

            char name[32];
            std::snprintf(name, sizeof(name), "%s_%03zu", prefix.c_str(), i);
            entry.source = name;
            handle.entries_.push_back(std::move(entry));
        }
    }
    return handle;
}

void materialize_dataset(const DatasetHandle& dataset, const std::string& root) {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample s = dataset.sample(i);
        const fs::path category_dir = fs::path(root) / s.category;
        const std::string split_name = s.split == Split::Train ? "train" : "test";
        const std::string kind = s.label == 0 ? "good" : "defect";
        const fs::path dir = category_dir / split_name / kind;
        fs::create_directories(dir);

        const std::string stem = fs::path(s.source).stem().string();
        write_rgb8_png((dir / (stem + ".png")).string(), s.image);
        if (s.label != 0) {
            const fs::path mask_dir = category_dir / "ground_truth" / kind;
            fs::create_directories(mask_dir);
            write_mask_png((mask_dir / (stem + "_mask.png")).string(), s.mask);
        }
    }
}

Tensor resize_image(const Tensor& image, std::size_t out_h, std::size_t out_w) {
    if (image.rank() != 3 || image.dim(2) != 3) {
        throw ValidationError("resize_image: expected an h x w x 3 tensor");
    }
    const std::size_t in_h = image.dim(0);
    const std::size_t in_w = image.dim(1);
    if (in_h == out_h && in_w == out_w) return image;

    auto source = [](std::size_t out_i, std::size_t in_n, std::size_t out_n) {
        double s = (static_cast<double>(out_i) + 0.5) * static_cast<double>(in_n) /
                       static_cast<double>(out_n) -
                   0.5;
        s = std::min(std::max(s, 0.0), static_cast<double>(in_n - 1));
        const std::size_t lo = static_cast<std::size_t>(s);
        return std::tuple{lo, std::min(lo + 1, in_n - 1), s - static_cast<double>(lo)};
    };

    Tensor out({out_h, out_w, 3});
    for (std::size_t y = 0; y < out_h; ++y) {
        const auto [y0, y1, fy] = source(y, in_h, out_h);
        for (std::size_t x = 0; x < out_w; ++x) {
            const auto [x0, x1, fx] = source(x, in_w, out_w);
            for (std::size_t c = 0; c < 3; ++c) {
                out(y, x, c) = (1.0 - fy) * ((1.0 - fx) * image(y0, x0, c) + fx * image(y0, x1, c)) +
                               fy * ((1.0 - fx) * image(y1, x0, c) + fx * image(y1, x1, c));
            }
        }
    }
    return out;
}

Tensor resize_mask_nearest(const Tensor& mask, std::size_t out_h, std::size_t out_w) {
    if (mask.rank() != 2) throw ValidationError("resize_mask_nearest: expected an h x w tensor");
    const std::size_t in_h = mask.dim(0);
    const std::size_t in_w = mask.dim(1);
    if (in_h == out_h && in_w == out_w) return mask;

    Tensor out({out_h, out_w});
    for (std::size_t y = 0; y < out_h; ++y) {
        std::size_t sy = static_cast<std::size_t>(
            (static_cast<double>(y) + 0.5) * static_cast<double>(in_h) /
            static_cast<double>(out_h));
        sy = std::min(sy, in_h - 1);
        for (std::size_t x = 0; x < out_w; ++x) {
            std::size_t sx = static_cast<std::size_t>(
                (static_cast<double>(x) + 0.5) * static_cast<double>(in_w) /
                static_cast<double>(out_w));
            sx = std::min(sx, in_w - 1);
            out(y, x) = mask(sy, sx);
        }
    }
    return out;
}

}  // namespace faprompt
