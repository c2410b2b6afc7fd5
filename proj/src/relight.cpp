/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/relight.cpp
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
#include "facejitter/relight/relight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "facejitter/core/errors.hpp"

namespace facejitter {

using nlohmann::json;

void LightingSpec::validate() const {
    if (std::abs(direction.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("lighting: direction must be unit length");
    }
    if (ambient < 0.0 || directional < 0.0 || ambient + directional <= 0.0) {
        throw std::invalid_argument("lighting: weights must be non-negative and not both zero");
    }
}

std::string lighting_to_json(const LightingSpec& light) {
    const json root = {
        {"direction", {light.direction.x(), light.direction.y(), light.direction.z()}},
        {"ambient", light.ambient},
        {"directional", light.directional},
    };
    return root.dump();
}

LightingSpec lighting_from_json(const std::string& json_text) {
    LightingSpec light;
    try {
        const json root = json::parse(json_text);
        const auto& d = root.at("direction");
        light.direction = Vec3(d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>());
        light.ambient = root.at("ambient").get<double>();
        light.directional = root.at("directional").get<double>();
    } catch (const json::exception& e) {
        throw IoError(std::string("lighting record: ") + e.what());
    }
    light.validate();
    return light;
}

int ModulationField::known_count() const {
    int count = 0;
    for (std::uint8_t k : known) count += k;
    return count;
}

ModulationField face_modulation(const HeadGeometry& geometry, const LightingSpec& light,
                                int width, int height) {
    light.validate();
    const PixelMap map = compute_pixel_map(geometry, geometry.source_camera, width, height);

    ModulationField field;
    field.values = ImageF(width, height, 0.f);
    field.known.assign(map.mask.size(), 0);

    const Mat3 rotation = geometry.source_camera.rotation();
    const Vec3 to_light = -light.direction;
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < map.mask.size(); ++i) {
        if (!map.mask[i] || map.weight[i] <= 0.5) continue;
        const Vec3 n_cam = rotation * map.normal[i];
        const double raw = light.ambient + light.directional * std::max(0.0, n_cam.dot(to_light));
        field.values.data[i] = static_cast<float>(raw);
        field.known[i] = 1;
        sum += raw;
        ++count;
    }
    if (count == 0) throw EmptyField("face modulation: no reliable face pixel in frame");

    if (light.directional == 0.0) {
        // Ambient only: normalization is exactly the identity.
        for (std::size_t i = 0; i < field.known.size(); ++i) {
            if (field.known[i]) field.values.data[i] = 1.f;
        }
        return field;
    }
    const double inv_mean = count / sum;
    for (std::size_t i = 0; i < field.known.size(); ++i) {
        if (field.known[i]) field.values.data[i] = static_cast<float>(field.values.data[i] * inv_mean);
    }
    return field;
}

namespace {

constexpr int kMaxSweeps = 10000;
// Converge well past the 1e-4 residual contract so the clamped result keeps
// both the harmonicity and max-principle margins.
constexpr double kResidualTarget = 1e-7;

// Near-optimal SOR factor for a 5-point Laplacian on the given grid; the
// lower clamp keeps small grids stable, the upper one limits over-relaxation
// noise amplification on very large ones.
double sor_omega(int width, int height) {
    const int n = std::max(width, height);
    const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / (n + 1)));
    return std::clamp(omega, 1.5, 1.98);
}

} // namespace

ModulationField extend_modulation(const ModulationField& sparse) {
    const int w = sparse.values.width;
    const int h = sparse.values.height;
    if (sparse.known.size() != sparse.values.data.size()) {
        throw std::invalid_argument("extend_modulation: mask/value size mismatch");
    }

    double known_min = std::numeric_limits<double>::infinity();
    double known_max = -known_min;
    double known_sum = 0.0;
    int known_count = 0;
    for (std::size_t i = 0; i < sparse.known.size(); ++i) {
        if (!sparse.known[i]) continue;
        const double v = sparse.values.data[i];
        known_min = std::min(known_min, v);
        known_max = std::max(known_max, v);
        known_sum += v;
        ++known_count;
    }
    if (known_count == 0) throw EmptyField("extend_modulation: no known pixel");

    ModulationField dense = sparse;
    std::vector<float>& f = dense.values.data;
    const float init = static_cast<float>(known_sum / known_count);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!sparse.known[i]) f[i] = init;
    }

    // Out-of-bounds neighbors mirror to the center value, so a border
    // pixel relaxes to the mean of its in-bounds neighbors.
    const auto neighbor_mean = [&](int u, int v) {
        const std::size_t i = static_cast<std::size_t>(v) * w + u;
        const double c = f[i];
        const double left = u > 0 ? f[i - 1] : c;
        const double right = u + 1 < w ? f[i + 1] : c;
        const double up = v > 0 ? f[i - w] : c;
        const double down = v + 1 < h ? f[i + w] : c;
        return 0.25 * (left + right + up + down);
    };

    const double scale = std::max(std::abs(known_min), std::abs(known_max));
    const double target = kResidualTarget * std::max(1.0, scale);
    const double omega = sor_omega(w, h);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        for (int parity = 0; parity < 2; ++parity) {
            for (int v = 0; v < h; ++v) {
                for (int u = (v + parity) & 1; u < w; u += 2) {
                    const std::size_t i = static_cast<std::size_t>(v) * w + u;
                    if (sparse.known[i]) continue;
                    const double value = f[i];
                    f[i] = static_cast<float>(value + omega * (neighbor_mean(u, v) - value));
                }
            }
        }
        double residual = 0.0;
        for (int v = 0; v < h; ++v) {
            for (int u = 0; u < w; ++u) {
                const std::size_t i = static_cast<std::size_t>(v) * w + u;
                if (sparse.known[i]) continue;
                residual = std::max(residual, std::abs(f[i] - neighbor_mean(u, v)));
            }
        }
        if (residual < target) break;
    }

    // Discrete maximum principle: the exact solution lies inside the known
    // value range, so clamp away any overrelaxation overshoot.
    const float lo = static_cast<float>(known_min);
    const float hi = static_cast<float>(known_max);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!sparse.known[i]) f[i] = std::clamp(f[i], lo, hi);
    }
    return dense;
}

Image8 apply_modulation(const Image8& image, const ImageF& field) {
    if (image.width != field.width || image.height != field.height) {
        throw std::invalid_argument("apply_modulation: dimension mismatch");
    }
    Image8 out = image;
    const int color_channels = image.channels == 4 ? 3 : image.channels;
    for (int v = 0; v < image.height; ++v) {
        for (int u = 0; u < image.width; ++u) {
            const double m = std::max(0.0, static_cast<double>(field.at(u, v)));
            if (std::abs(m - 1.0) < 1e-9) continue; // identity: keep bytes exactly
            const std::uint8_t* src = image.pixel(u, v);
            std::uint8_t* dst = out.pixel(u, v);
            int brightest = 0;
            for (int c = 0; c < color_channels; ++c) brightest = std::max<int>(brightest, src[c]);
            // Uniform scale k preserves hue and saturation; cap it where the
            // value channel (brightest / 255) would clip.
            const double k = brightest > 0 ? std::min(m, 255.0 / brightest) : m;
            for (int c = 0; c < color_channels; ++c) {
                dst[c] = static_cast<std::uint8_t>(std::clamp(std::lround(src[c] * k), 0l, 255l));
            }
        }
    }
    return out;
}

Image8 relight(const Image8& source, const MorphableModel& model, const FitResult& fit,
               int image_index, const LightingSpec& light, ImageF* modulation_out) {
    const HeadGeometry geometry = make_head_geometry(model, fit, image_index);
    const ModulationField sparse = face_modulation(geometry, light, source.width, source.height);
    const ModulationField dense = extend_modulation(sparse);
    Image8 out = apply_modulation(source, dense.values);
    if (modulation_out) *modulation_out = dense.values;
    return out;
}

} // namespace facejitter
