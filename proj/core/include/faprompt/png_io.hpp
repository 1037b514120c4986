// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>

#include "faprompt/tensor.hpp"

namespace faprompt {

/// Decodes a PNG to an h x w x 3 tensor in [0, 1]; grayscale sources are
/// replicated across channels. Throws IngestionError naming the file.
Tensor read_rgb_png(const std::string& path);

/// Reads only the header and reports (height, width).
std::pair<std::size_t, std::size_t> read_png_size(const std::string& path);

/// Decodes a PNG to a binary h x w mask (any nonzero sample -> 1).
Tensor read_mask_png(const std::string& path);

/// Writes an h x w x 3 tensor in [0, 1] as 8-bit RGB.
void write_rgb8_png(const std::string& path, const Tensor& image);

/// Writes an h x w binary mask as 8-bit grayscale (0 / 255).
void write_mask_png(const std::string& path, const Tensor& mask);

/// Writes an h x w map in [0, 1] as 16-bit grayscale.
void write_gray16_png(const std::string& path, const Tensor& map);

}  // namespace faprompt
