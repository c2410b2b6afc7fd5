/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/core/image.hpp
 *
 * Copyright 2026 The facejitter authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facejitter/core/types.hpp"

namespace facejitter {

/// Interleaved 8-bit image, 1 (gray), 3 (RGB) or 4 (RGBA) channels.
/// Pixel (u, v) has u growing rightwards and v growing downwards; row 0 is
/// the top of the image. Continuous coordinates place pixel centres on the
/// integer grid.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    Image8() = default;
    Image8(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::uint8_t* pixel(int u, int v) {
        return data.data() + (static_cast<std::size_t>(v) * width + u) * channels;
    }
    const std::uint8_t* pixel(int u, int v) const {
        return data.data() + (static_cast<std::size_t>(v) * width + u) * channels;
    }
    bool same_size(const Image8& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }
};

/// Single-channel float image (masks, weights, depth, modulation fields).
struct ImageF {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    ImageF() = default;
    ImageF(int w, int h, float fill = 0.f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
    float at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
};

/// Reads an 8-bit PNG, preserving its channel count (gray/RGB/RGBA).
/// Throws IoError on failure.
Image8 read_png(const std::string& path);

/// Writes an 8-bit PNG. Throws IoError on failure.
void write_png(const std::string& path, const Image8& image);

/// Depth/modulation dumps: magic "FJFM", u32 width, u32 height (little
/// endian), then width*height float32 samples in row-major order.
void write_float_map(const std::string& path, const ImageF& map);
ImageF read_float_map(const std::string& path);

/// Bilinear sample of one channel at continuous (u, v); coordinates are
/// clamped to the image border (edge-clamp padding). Returns values in [0,1].
double bilinear_sample(const Image8& image, double u, double v, int channel);

/// True when (u, v) lands inside the sampling domain (no clamping needed).
inline bool in_bounds(const Image8& image, double u, double v) {
    return u >= 0.0 && v >= 0.0 && u <= image.width - 1.0 && v <= image.height - 1.0;
}

/// Separable Gaussian blur with edge-clamped borders; kernel truncated at
/// radius ceil(3*sigma).
ImageF gaussian_blur(const ImageF& image, double sigma);

} // namespace facejitter
