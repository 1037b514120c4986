// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "faprompt/errors.hpp"

namespace faprompt {

namespace {

png_image begin_read(const std::string& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw IngestionError("cannot read PNG '" + path + "': " + image.message);
    }
    return image;
}

}  // namespace

Tensor read_rgb_png(const std::string& path) {
    png_image image = begin_read(path);
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IngestionError("cannot decode PNG '" + path + "': " + image.message);
    }
    Tensor out({image.height, image.width, 3});
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        out[i] = static_cast<double>(buffer[i]) / 255.0;
    }
    return out;
}

std::pair<std::size_t, std::size_t> read_png_size(const std::string& path) {
    png_image image = begin_read(path);
    const std::pair<std::size_t, std::size_t> dims{image.height, image.width};
    png_image_free(&image);
    return dims;
}

Tensor read_mask_png(const std::string& path) {
    png_image image = begin_read(path);
    image.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IngestionError("cannot decode PNG '" + path + "': " + image.message);
    }
    Tensor out({image.height, image.width});
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        out[i] = buffer[i] != 0 ? 1.0 : 0.0;
    }
    return out;
}

void write_rgb8_png(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.dim(2) != 3) {
        throw ValidationError("write_rgb8_png: expected an h x w x 3 tensor");
    }
    png_image out{};
    out.version = PNG_IMAGE_VERSION;
    out.width = static_cast<png_uint_32>(image.dim(1));
    out.height = static_cast<png_uint_32>(image.dim(0));
    out.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, image[i]));
        buffer[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    if (!png_image_write_to_file(&out, path.c_str(), 0, buffer.data(), 0, nullptr)) {
        throw IngestionError("cannot write PNG '" + path + "': " + out.message);
    }
}

void write_mask_png(const std::string& path, const Tensor& mask) {
    if (mask.rank() != 2) throw ValidationError("write_mask_png: expected an h x w tensor");
    png_image out{};
    out.version = PNG_IMAGE_VERSION;
    out.width = static_cast<png_uint_32>(mask.dim(1));
    out.height = static_cast<png_uint_32>(mask.dim(0));
    out.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buffer(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) buffer[i] = mask[i] != 0.0 ? 255 : 0;
    if (!png_image_write_to_file(&out, path.c_str(), 0, buffer.data(), 0, nullptr)) {
        throw IngestionError("cannot write PNG '" + path + "': " + out.message);
    }
}

void write_gray16_png(const std::string& path, const Tensor& map) {
    if (map.rank() != 2) throw ValidationError("write_gray16_png: expected an h x w tensor");
    png_image out{};
    out.version = PNG_IMAGE_VERSION;
    out.width = static_cast<png_uint_32>(map.dim(1));
    out.height = static_cast<png_uint_32>(map.dim(0));
    out.format = PNG_FORMAT_LINEAR_Y;
    std::vector<std::uint16_t> buffer(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, map[i]));
        buffer[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    }
    if (!png_image_write_to_file(&out, path.c_str(), 0, buffer.data(), 0, nullptr)) {
        throw IngestionError("cannot write PNG '" + path + "': " + out.message);
    }
}

}  // namespace faprompt
