/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/image.cpp
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
#include "facejitter/core/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "facejitter/core/errors.hpp"

namespace facejitter {

Image8 read_png(const std::string& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw IoError("failed to open PNG '" + path + "': " + png.message);
    }
    int channels = 3;
    switch (png.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA)) {
    case 0: channels = 1; break;
    case PNG_FORMAT_FLAG_COLOR: channels = 3; break;
    default: channels = 4; break;
    }
    png.format = channels == 1 ? PNG_FORMAT_GRAY : (channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA);
    Image8 image(static_cast<int>(png.width), static_cast<int>(png.height), channels);
    if (!png_image_finish_read(&png, nullptr, image.data.data(), 0, nullptr)) {
        png_image_free(&png);
        throw IoError("failed to read PNG '" + path + "': " + png.message);
    }
    return image;
}

void write_png(const std::string& path, const Image8& image) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    switch (image.channels) {
    case 1: png.format = PNG_FORMAT_GRAY; break;
    case 3: png.format = PNG_FORMAT_RGB; break;
    case 4: png.format = PNG_FORMAT_RGBA; break;
    default: throw IoError("unsupported channel count for PNG write");
    }
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0, nullptr)) {
        throw IoError("failed to write PNG '" + path + "': " + png.message);
    }
}

namespace {

constexpr char kFloatMapMagic[4] = {'F', 'J', 'F', 'M'};

void put_u32(std::ofstream& out, std::uint32_t value) {
    unsigned char bytes[4] = {static_cast<unsigned char>(value & 0xff),
                              static_cast<unsigned char>((value >> 8) & 0xff),
                              static_cast<unsigned char>((value >> 16) & 0xff),
                              static_cast<unsigned char>((value >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

} // namespace

void write_float_map(const std::string& path, const ImageF& map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kFloatMapMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(map.width));
    put_u32(out, static_cast<std::uint32_t>(map.height));
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(map.data.data()),
              static_cast<std::streamsize>(map.data.size() * sizeof(float)));
    if (!out) throw IoError("short write to '" + path + "'");
}

ImageF read_float_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFloatMapMagic, 4) != 0) {
        throw IoError("'" + path + "' is not a float map file");
    }
    const std::uint32_t w = get_u32(in);
    const std::uint32_t h = get_u32(in);
    ImageF map(static_cast<int>(w), static_cast<int>(h));
    in.read(reinterpret_cast<char*>(map.data.data()),
            static_cast<std::streamsize>(map.data.size() * sizeof(float)));
    if (!in) throw IoError("truncated float map '" + path + "'");
    return map;
}

double bilinear_sample(const Image8& image, double u, double v, int channel) {
    const double cu = std::clamp(u, 0.0, static_cast<double>(image.width - 1));
    const double cv = std::clamp(v, 0.0, static_cast<double>(image.height - 1));
    const int u0 = static_cast<int>(std::floor(cu));
    const int v0 = static_cast<int>(std::floor(cv));
    const int u1 = std::min(u0 + 1, image.width - 1);
    const int v1 = std::min(v0 + 1, image.height - 1);
    const double fu = cu - u0;
    const double fv = cv - v0;
    const double p00 = image.pixel(u0, v0)[channel];
    const double p10 = image.pixel(u1, v0)[channel];
    const double p01 = image.pixel(u0, v1)[channel];
    const double p11 = image.pixel(u1, v1)[channel];
    const double top = p00 + fu * (p10 - p00);
    const double bottom = p01 + fu * (p11 - p01);
    return (top + fv * (bottom - top)) / 255.0;
}

ImageF gaussian_blur(const ImageF& image, double sigma) {
    if (sigma <= 0.0) return image;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        kernel[i + radius] = w;
        sum += w;
    }
    for (double& w : kernel) w /= sum;

    const int width = image.width;
    const int height = image.height;
    ImageF tmp(width, height);
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int uu = std::clamp(u + i, 0, width - 1);
                acc += kernel[i + radius] * image.at(uu, v);
            }
            tmp.at(u, v) = static_cast<float>(acc);
        }
    }
    ImageF out(width, height);
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int vv = std::clamp(v + i, 0, height - 1);
                acc += kernel[i + radius] * tmp.at(u, vv);
            }
            out.at(u, v) = static_cast<float>(acc);
        }
    }
    return out;
}

} // namespace facejitter
