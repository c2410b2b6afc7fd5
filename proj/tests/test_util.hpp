/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: tests/test_util.hpp
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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "facejitter/augment/augment.hpp"
#include "facejitter/core/image.hpp"
#include "facejitter/core/rng.hpp"
#include "facejitter/fitting/fitting.hpp"
#include "facejitter/morphablemodel/synthetic.hpp"
#include "facejitter/render/bvh.hpp"

namespace fjtest {

using namespace facejitter;

/// Small model for fast unit tests: 610 vertices, 1216 triangles.
inline const MorphableModel& small_model() {
    static const MorphableModel model = build_synthetic_model(11, 40, 12, 6, 20, 20, 32);
    return model;
}

/// Mid-size model for fitting and rendering tests: 1394 vertices.
inline const MorphableModel& medium_model() {
    static const MorphableModel model = build_synthetic_model(12, 80, 20, 8, 40, 30, 48);
    return model;
}

/// Lat-long sphere mesh; vertices lie exactly on the sphere so analytic
/// oracles see only tessellation error.
struct SphereMesh {
    VertexSet vertices;
    MeshTopology topology;
};

inline SphereMesh make_sphere(double radius, int bands, int segments) {
    SphereMesh m;
    m.vertices.resize((bands - 1) * segments + 2, 3);
    m.vertices.row(0) = Vec3(0, -radius, 0).transpose();
    int row = 1;
    for (int b = 1; b < bands; ++b) {
        const double theta = std::numbers::pi * b / bands;
        for (int s = 0; s < segments; ++s) {
            const double phi = 2.0 * std::numbers::pi * s / segments;
            m.vertices.row(row++) = Vec3(radius * std::sin(theta) * std::cos(phi),
                                         -radius * std::cos(theta),
                                         radius * std::sin(theta) * std::sin(phi))
                                        .transpose();
        }
    }
    m.vertices.row(row) = Vec3(0, radius, 0).transpose();
    const int last = row;
    const auto ring = [&](int b, int s) { return 1 + (b - 1) * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) m.topology.triangles.push_back({0, ring(1, s + 1), ring(1, s)});
    for (int b = 1; b + 1 < bands; ++b) {
        for (int s = 0; s < segments; ++s) {
            m.topology.triangles.push_back({ring(b, s), ring(b, s + 1), ring(b + 1, s)});
            m.topology.triangles.push_back({ring(b, s + 1), ring(b + 1, s + 1), ring(b + 1, s)});
        }
    }
    for (int s = 0; s < segments; ++s)
        m.topology.triangles.push_back({ring(bands - 1, s), ring(bands - 1, s + 1), last});
    m.topology.vertex_count = static_cast<int>(m.vertices.rows());
    return m;
}

/// One generated subject with known coefficients, camera and landmarks.
struct TruthCase {
    ShapeCoefficients coeffs;
    OrthographicCamera camera;
    VertexSet vertices;
    LandmarkSet landmarks;
};

struct CaseSpec {
    double yaw_range = 0.5;    ///< radians, uniform symmetric
    double pitch_range = 0.2;
    double roll_range = 0.2;
    double coeff_limit = 2.0;  ///< truth coefficients drawn uniform within +- limit
    double scale_lo = 1.6;
    double scale_hi = 2.6;
    int width = 256;
    int height = 256;
    double noise_px = 0.0;     ///< per-axis normal landmark noise
};

/// Draws a ground-truth subject/camera pair and synthesizes its landmark set
/// with the same contour-reselection rule the fitter uses.
inline TruthCase make_case(const MorphableModel& model, std::uint64_t seed,
                           const CaseSpec& spec = {}) {
    Rng rng(seed);
    TruthCase truth;
    truth.coeffs.alpha.resize(model.subject.count());
    for (int i = 0; i < model.subject.count(); ++i)
        truth.coeffs.alpha[i] = rng.uniform(-spec.coeff_limit, spec.coeff_limit);
    truth.coeffs.beta.resize(model.expression.count());
    for (int i = 0; i < model.expression.count(); ++i)
        truth.coeffs.beta[i] = rng.uniform(-spec.coeff_limit, spec.coeff_limit);

    truth.camera.yaw = rng.uniform(-spec.yaw_range, spec.yaw_range);
    truth.camera.pitch = rng.uniform(-spec.pitch_range, spec.pitch_range);
    truth.camera.roll = rng.uniform(-spec.roll_range, spec.roll_range);
    truth.camera.scale = rng.uniform(spec.scale_lo, spec.scale_hi);
    truth.camera.offset =
        Vec2(spec.width / 2.0 + rng.uniform(-8.0, 8.0), spec.height / 2.0 + rng.uniform(-8.0, 8.0));

    truth.vertices = instantiate_shape(model, truth.coeffs);
    const auto anchors = anchor_vertices(model.topology, truth.vertices, truth.camera);
    truth.landmarks.image_id = "case-" + std::to_string(seed);
    for (int id = 0; id < kNumLandmarks; ++id) {
        LandmarkPoint point;
        point.id = id;
        point.pixel = project(truth.camera, truth.vertices.row(anchors[static_cast<std::size_t>(id)])
                                                .transpose());
        if (spec.noise_px > 0) {
            point.pixel.x() += spec.noise_px * rng.normal();
            point.pixel.y() += spec.noise_px * rng.normal();
        }
        truth.landmarks.points.push_back(point);
    }
    return truth;
}

/// Wraps known-true coefficients and a camera as a single-image fit, for
/// exercising the render stages in isolation from the estimator.
inline FitResult manual_fit(const ShapeCoefficients& coeffs, const OrthographicCamera& camera,
                            const std::string& image_id = "src") {
    FitResult fit;
    fit.image_ids = {image_id};
    fit.alpha = coeffs.alpha;
    fit.beta = {coeffs.beta};
    fit.cameras = {camera};
    fit.used = {true};
    fit.rms_px = {0.0};
    fit.residuals = {Eigen::VectorXd()};
    fit.rms_trajectory = {0.0};
    fit.iterations = 1;
    fit.converged = true;
    return fit;
}

/// Smooth full-range texture of head-frame position; periods are long
/// against the ~180 mm head so bilinear resampling stays accurate.
inline Vec3 texture_at(const Vec3& p) {
    return Vec3(0.5 + 0.45 * std::sin(0.021 * p.x() + 0.5),
                0.5 + 0.45 * std::sin(0.019 * p.y() - 0.3),
                0.5 + 0.45 * std::sin(0.023 * p.z() + 1.1));
}

/// Bilaterally symmetric variant (even in x) for mirror-property tests.
inline Vec3 texture_sym(const Vec3& p) {
    return texture_at(Vec3(std::abs(p.x()), p.y(), p.z()));
}

/// Direct ray-cast rendering of a textured mesh: the ground-truth oracle the
/// resampling pipeline is judged against. Background is flat gray.
inline Image8 raycast_textured(const VertexSet& vertices, const MeshTopology& topology,
                               const OrthographicCamera& camera, int width, int height,
                               const std::function<Vec3(const Vec3&)>& texture = texture_at,
                               std::uint8_t background = 180) {
    TriangleBVH bvh(vertices, topology.triangles);
    const Mat3 rotation = camera.rotation();
    const Mat3 rotation_t = rotation.transpose();

    const auto [lo, hi] = bvh.bounds();
    double z_max = -1e300;
    for (int corner = 0; corner < 8; ++corner) {
        const Vec3 c((corner & 1) ? hi.x() : lo.x(), (corner & 2) ? hi.y() : lo.y(),
                     (corner & 4) ? hi.z() : lo.z());
        z_max = std::max(z_max, (rotation * c).z());
    }
    const double start_z = z_max + 0.01 * bvh.bbox_diagonal() + 1.0;
    const Vec3 direction = rotation_t * Vec3(0, 0, -1);

    Image8 out(width, height, 3, background);
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            const Vec3 point_cam((u - camera.offset.x()) / camera.scale,
                                 (v - camera.offset.y()) / camera.scale, start_z);
            Ray ray{rotation_t * point_cam, direction};
            const auto hit = bvh.intersect(ray);
            if (!hit) continue;
            const Vec3 p = ray.origin + hit->depth * ray.direction;
            const Vec3 color = texture(p);
            std::uint8_t* px = out.pixel(u, v);
            for (int c = 0; c < 3; ++c)
                px[c] = static_cast<std::uint8_t>(
                    std::lround(std::clamp(color[c], 0.0, 1.0) * 255.0));
        }
    }
    return out;
}

/// Mean absolute pixel difference in [0,1] over pixels the gate admits.
/// Returns -1 when the gate admits nothing.
inline double mean_abs_diff(const Image8& a, const Image8& b,
                            const std::function<bool(int, int)>& gate = {}) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) return 1.0;
    double sum = 0.0;
    std::size_t count = 0;
    for (int v = 0; v < a.height; ++v) {
        for (int u = 0; u < a.width; ++u) {
            if (gate && !gate(u, v)) continue;
            const std::uint8_t* pa = a.pixel(u, v);
            const std::uint8_t* pb = b.pixel(u, v);
            for (int c = 0; c < a.channels; ++c)
                sum += std::abs(static_cast<int>(pa[c]) - static_cast<int>(pb[c]));
            count += static_cast<std::size_t>(a.channels);
        }
    }
    if (count == 0) return -1.0;
    return sum / (255.0 * static_cast<double>(count));
}

/// Self-cleaning scratch directory under the system temp root.
class TempDir {
  public:
    explicit TempDir(const std::string& name) {
        path_ = std::filesystem::temp_directory_path() /
                ("facejitter-" + name + "-" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

/// Principal-value angular difference.
inline double angle_diff(double a, double b) {
    return std::atan2(std::sin(a - b), std::cos(a - b));
}

/// Reads a whole file as bytes; throws when the file cannot be opened.
inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("test fixture: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Writes text to a file, replacing any previous content.
inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) throw std::runtime_error("test fixture: cannot write " + path);
}

/// Writes `count` synthetic records into `dir`: a rendered PNG plus a landmark
/// file per record, ids "rec0".., landmark image ids matching the record ids.
inline DatasetManifest write_dataset(const TempDir& dir, const MorphableModel& model,
                                     int count, std::uint64_t seed0, int size = 96,
                                     double scale_lo = 0.35, double scale_hi = 0.4) {
    DatasetManifest manifest;
    for (int i = 0; i < count; ++i) {
        CaseSpec spec;
        spec.width = size;
        spec.height = size;
        spec.scale_lo = scale_lo;
        spec.scale_hi = scale_hi;
        TruthCase truth = make_case(model, seed0 + static_cast<std::uint64_t>(i), spec);
        const std::string id = "rec" + std::to_string(i);
        truth.landmarks.image_id = id;

        Image8 source = raycast_textured(truth.vertices, model.topology, truth.camera,
                                         size, size);
        ManifestRecord record;
        record.id = id;
        record.subject = "subj" + std::to_string(i % 2);
        record.image_path = dir.file(id + ".png");
        record.landmark_path = dir.file(id + ".landmarks.json");
        write_png(record.image_path, source);
        write_text_file(record.landmark_path, landmarks_to_json({truth.landmarks}));
        manifest.records.push_back(record);
    }
    manifest.validate();
    return manifest;
}

} // namespace fjtest
