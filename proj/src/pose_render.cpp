/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/pose_render.cpp
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
#include "facejitter/render/pose_render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace facejitter {

void PoseSpec::validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("pose spec: dimensions must be positive");
}

OrthographicCamera target_camera(const PoseSpec& pose, const OrthographicCamera& source) {
    OrthographicCamera cam;
    cam.scale = pose.scale.value_or(source.scale);
    cam.offset = pose.offset.value_or(source.offset);
    cam.yaw = pose.yaw;
    cam.pitch = pose.pitch;
    cam.roll = pose.roll;
    return cam;
}

HeadGeometry make_head_geometry(const MorphableModel& model, const FitResult& fit,
                                int image_index) {
    if (image_index < 0 || image_index >= fit.image_count()) {
        throw std::invalid_argument("head geometry: image index out of range");
    }
    const VertexSet vertices = instantiate_shape(model, fit.coefficients(image_index));
    const VertexNormals vn = vertex_normals(vertices, model.topology);
    const auto& topo = model.topology;

    HeadGeometry g{TriangleBVH(vertices, topo.triangles), fit.cameras[image_index],
                   {}, {}, {}, {}, {}, 0.0};
    const std::size_t n = topo.triangles.size();
    g.corners.resize(3 * n);
    g.corner_normals.resize(3 * n);
    g.mirror_corners.resize(3 * n);
    g.mirror_corner_normals.resize(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            const int v = topo.triangles[i][k];
            const int m = topo.symmetry[v];
            g.corners[3 * i + k] = vertices.row(v).transpose();
            g.corner_normals[3 * i + k] = vn.normals[v];
            g.mirror_corners[3 * i + k] = vertices.row(m).transpose();
            g.mirror_corner_normals[3 * i + k] = vn.normals[m];
        }
    }

    // Occluding-contour vertices under the source view, for the background
    // plane depth. The threshold widens until the set is non-empty.
    const Vec3 view = g.source_camera.rotation().transpose() * Vec3(0.0, 0.0, -1.0);
    for (double threshold = 0.1; g.silhouette_points.empty(); threshold *= 2.0) {
        for (int v = 0; v < topo.vertex_count; ++v) {
            if (std::abs(vn.normals[v].dot(view)) <= threshold) {
                g.silhouette_points.push_back(vertices.row(v).transpose());
            }
        }
        if (threshold > 1.0) break;
    }

    g.occlusion_bias = 1e-4 * g.bvh.bbox_diagonal();
    return g;
}

double visibility_weight(const Vec3& normal, const Vec3& view_dir, bool occluded) {
    if (occluded) return 0.0;
    const double cos_theta = std::max(0.0, -normal.dot(view_dir));
    if (cos_theta <= kVisibilityCosLo) return 0.0;
    if (cos_theta >= kVisibilityCosHi) return 1.0;
    const double t = (cos_theta - kVisibilityCosLo) / (kVisibilityCosHi - kVisibilityCosLo);
    return t * t * (3.0 - 2.0 * t);
}

namespace {

// Parallel ray bundle of an orthographic camera: one ray per pixel, all with
// the same direction, starting on a plane in front of the whole mesh.
struct RayFrame {
    Mat3 rotation_t; ///< transpose of the camera rotation
    Vec3 direction;
    double start_z;
    double inv_scale;
    Vec2 offset;

    Ray pixel_ray(double u, double v) const {
        const Vec3 cam_point((u - offset.x()) * inv_scale, (v - offset.y()) * inv_scale, start_z);
        return {rotation_t * cam_point, direction};
    }
};

RayFrame make_ray_frame(const TriangleBVH& bvh, const OrthographicCamera& camera) {
    RayFrame frame;
    frame.rotation_t = camera.rotation().transpose();
    frame.direction = frame.rotation_t * Vec3(0.0, 0.0, -1.0);
    frame.inv_scale = 1.0 / camera.scale;
    frame.offset = camera.offset;

    const auto [lo, hi] = bvh.bounds();
    double max_z = -std::numeric_limits<double>::infinity();
    const Mat3 rotation = camera.rotation();
    for (int corner = 0; corner < 8; ++corner) {
        const Vec3 p(corner & 1 ? hi.x() : lo.x(), corner & 2 ? hi.y() : lo.y(),
                     corner & 4 ? hi.z() : lo.z());
        max_z = std::max(max_z, (rotation * p).z());
    }
    frame.start_z = max_z + 0.01 * bvh.bbox_diagonal() + 1.0;
    return frame;
}

Vec3 interpolate(const std::vector<Vec3>& per_corner, int triangle, const Vec3& bary) {
    return bary(0) * per_corner[3 * triangle] + bary(1) * per_corner[3 * triangle + 1] +
           bary(2) * per_corner[3 * triangle + 2];
}

} // namespace

PixelMap compute_pixel_map(const HeadGeometry& geometry, const OrthographicCamera& target,
                           int width, int height) {
    PixelMap map;
    map.width = width;
    map.height = height;
    const std::size_t count = static_cast<std::size_t>(width) * height;
    map.source.assign(count, Vec2::Zero());
    map.weight.assign(count, 0.0);
    map.mirror_source.assign(count, Vec2::Zero());
    map.mirror_weight.assign(count, 0.0);
    map.mask.assign(count, 0);
    map.normal.assign(count, Vec3::Zero());

    const RayFrame frame = make_ray_frame(geometry.bvh, target);
    const Vec3 source_view =
        geometry.source_camera.rotation().transpose() * Vec3(0.0, 0.0, -1.0);
    const Vec3 toward_source = -source_view;

    const auto occluded = [&](const Vec3& point) {
        const Ray shadow{point + geometry.occlusion_bias * toward_source, toward_source};
        return geometry.bvh.intersect(shadow).has_value();
    };

    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            const auto hit = geometry.bvh.intersect(frame.pixel_ray(u, v));
            if (!hit) continue;
            const std::size_t i = map.index(u, v);
            const Vec3 point = interpolate(geometry.corners, hit->triangle, hit->barycentric);
            Vec3 n = interpolate(geometry.corner_normals, hit->triangle, hit->barycentric);
            const double nn = n.norm();
            if (nn > 0.0) n /= nn;

            const double w_direct = visibility_weight(n, source_view, occluded(point));
            map.source[i] = project(geometry.source_camera, point);
            map.weight[i] = w_direct;
            map.normal[i] = n;

            const Vec3 mirrored = interpolate(geometry.mirror_corners, hit->triangle, hit->barycentric);
            Vec3 nm = interpolate(geometry.mirror_corner_normals, hit->triangle, hit->barycentric);
            const double nmn = nm.norm();
            if (nmn > 0.0) nm /= nmn;
            const double w_mirror = visibility_weight(nm, source_view, occluded(mirrored));
            map.mirror_source[i] = project(geometry.source_camera, mirrored);
            map.mirror_weight[i] = (1.0 - w_direct) * w_mirror;
            map.mask[i] = 1;
        }
    }
    return map;
}

FaceLayer resample(const Image8& source, const PixelMap& map) {
    FaceLayer layer{Image8(map.width, map.height, 3), ImageF(map.width, map.height, 0.f)};
    const auto channel_of = [&](int c) { return source.channels == 1 ? 0 : c; };
    for (int v = 0; v < map.height; ++v) {
        for (int u = 0; u < map.width; ++u) {
            const std::size_t i = map.index(u, v);
            if (!map.mask[i]) continue;
            double w_d = map.weight[i];
            double w_m = map.mirror_weight[i];
            if (!in_bounds(source, map.source[i].x(), map.source[i].y())) w_d = 0.0;
            if (!in_bounds(source, map.mirror_source[i].x(), map.mirror_source[i].y())) w_m = 0.0;
            const double sum = w_d + w_m;
            layer.alpha.at(u, v) = static_cast<float>(std::clamp(sum, 0.0, 1.0));
            if (sum <= 0.0) continue;
            std::uint8_t* out = layer.color.pixel(u, v);
            for (int c = 0; c < 3; ++c) {
                double value = 0.0;
                if (w_d > 0.0) {
                    value += w_d * bilinear_sample(source, map.source[i].x(), map.source[i].y(),
                                                   channel_of(c));
                }
                if (w_m > 0.0) {
                    value += w_m * bilinear_sample(source, map.mirror_source[i].x(),
                                                   map.mirror_source[i].y(), channel_of(c));
                }
                out[c] = static_cast<std::uint8_t>(
                    std::clamp(std::lround(255.0 * value / sum), 0l, 255l));
            }
        }
    }
    return layer;
}

Image8 background_warp(const Image8& source, const HeadGeometry& geometry,
                       const OrthographicCamera& target, int width, int height) {
    // Plane depth: median source-camera z over the silhouette vertices.
    const Mat3 source_rotation = geometry.source_camera.rotation();
    std::vector<double> depths;
    depths.reserve(geometry.silhouette_points.size());
    for (const Vec3& p : geometry.silhouette_points) depths.push_back((source_rotation * p).z());
    double plane_z = 0.0;
    if (!depths.empty()) {
        const std::size_t mid = depths.size() / 2;
        std::nth_element(depths.begin(), depths.begin() + mid, depths.end());
        plane_z = depths[mid];
    }

    // Exact target-pixel -> source-pixel map through the plane; affine for
    // orthographic cameras, recovered from three evaluations.
    const Mat3 q = source_rotation * target.rotation().transpose();
    const auto through_plane = [&](double u, double v) -> Vec2 {
        const double x = (u - target.offset.x()) / target.scale;
        const double y = (v - target.offset.y()) / target.scale;
        const double z =
            std::abs(q(2, 2)) < 1e-9 ? 0.0 : (plane_z - q(2, 0) * x - q(2, 1) * y) / q(2, 2);
        const Vec3 s = q * Vec3(x, y, z);
        return geometry.source_camera.scale * Vec2(s.x(), s.y()) + geometry.source_camera.offset;
    };
    const Vec2 origin = through_plane(0.0, 0.0);
    const Vec2 du = through_plane(1.0, 0.0) - origin;
    const Vec2 dv = through_plane(0.0, 1.0) - origin;

    Image8 out(width, height, 3);
    const auto channel_of = [&](int c) { return source.channels == 1 ? 0 : c; };
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            const Vec2 src = origin + static_cast<double>(u) * du + static_cast<double>(v) * dv;
            std::uint8_t* px = out.pixel(u, v);
            for (int c = 0; c < 3; ++c) {
                px[c] = static_cast<std::uint8_t>(std::clamp(
                    std::lround(255.0 * bilinear_sample(source, src.x(), src.y(), channel_of(c))),
                    0l, 255l));
            }
        }
    }
    return out;
}

Image8 render_pose(const Image8& source, const MorphableModel& model, const FitResult& fit,
                   int image_index, const PoseSpec& pose, RenderLayers* layers) {
    pose.validate();
    const HeadGeometry geometry = make_head_geometry(model, fit, image_index);
    const OrthographicCamera target = target_camera(pose, geometry.source_camera);

    const PixelMap map = compute_pixel_map(geometry, target, pose.width, pose.height);
    FaceLayer face = resample(source, map);
    Image8 background = background_warp(source, geometry, target, pose.width, pose.height);

    // Feather: the binary mask blurred by sigma 1 px gives a ~2 px transition
    // band multiplying the face alpha.
    ImageF mask_f(pose.width, pose.height, 0.f);
    for (std::size_t i = 0; i < map.mask.size(); ++i) mask_f.data[i] = map.mask[i] ? 1.f : 0.f;
    const ImageF feather = gaussian_blur(mask_f, 1.0);

    ImageF alpha(pose.width, pose.height, 0.f);
    Image8 out(pose.width, pose.height, 3);
    for (int v = 0; v < pose.height; ++v) {
        for (int u = 0; u < pose.width; ++u) {
            const float a = std::clamp(face.alpha.at(u, v) * feather.at(u, v), 0.f, 1.f);
            alpha.at(u, v) = a;
            const std::uint8_t* fc = face.color.pixel(u, v);
            const std::uint8_t* bc = background.pixel(u, v);
            std::uint8_t* oc = out.pixel(u, v);
            for (int c = 0; c < 3; ++c) {
                const double value = a * fc[c] + (1.0 - a) * bc[c];
                oc[c] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0l, 255l));
            }
        }
    }
    if (layers) {
        layers->face = std::move(face);
        layers->background = std::move(background);
        layers->feathered_alpha = std::move(alpha);
    }
    return out;
}

ImageF render_depth(const HeadGeometry& geometry, const OrthographicCamera& camera,
                    int width, int height) {
    ImageF depth(width, height, std::numeric_limits<float>::infinity());
    const RayFrame frame = make_ray_frame(geometry.bvh, camera);
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) {
            const auto hit = geometry.bvh.intersect(frame.pixel_ray(u, v));
            // Depth is the negated camera-space z: smaller means closer.
            if (hit) depth.at(u, v) = static_cast<float>(hit->depth - frame.start_z);
        }
    }
    return depth;
}

} // namespace facejitter
