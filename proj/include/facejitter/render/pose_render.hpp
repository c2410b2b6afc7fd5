/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/render/pose_render.hpp
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

#include <optional>
#include <vector>

#include "facejitter/core/image.hpp"
#include "facejitter/fitting/fitting.hpp"
#include "facejitter/render/bvh.hpp"

namespace facejitter {

/// Target view for a pose-jittered rendering. Angles are absolute; scale and
/// offset default to the source camera's values when unset.
struct PoseSpec {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
    int width = 0;
    int height = 0;
    std::optional<double> scale;
    std::optional<Vec2> offset;

    void validate() const; ///< dimensions must be positive
};

OrthographicCamera target_camera(const PoseSpec& pose, const OrthographicCamera& source);

/// Everything pose rendering and relighting need about one fitted image:
/// the instantiated shape, its BVH, per-triangle-corner smooth normals and
/// the mirrored-surface equivalents derived from the symmetry map.
struct HeadGeometry {
    TriangleBVH bvh;
    OrthographicCamera source_camera;
    std::vector<Vec3> corners;               ///< 3 per triangle: vertex positions
    std::vector<Vec3> corner_normals;        ///< 3 per triangle, unit
    std::vector<Vec3> mirror_corners;        ///< 3 per triangle: mirrored vertex positions
    std::vector<Vec3> mirror_corner_normals; ///< 3 per triangle, unit
    std::vector<Vec3> silhouette_points;     ///< source-view occluding-contour vertex positions
    double occlusion_bias = 0.0;             ///< shadow-ray origin offset (1e-4 * bbox diagonal)
};

HeadGeometry make_head_geometry(const MorphableModel& model, const FitResult& fit,
                                int image_index);

/// Per-output-pixel sampling instructions. The mirrored weight is stored
/// already attenuated by (1 - direct weight), so the resample blend returns
/// the direct appearance wherever the direct view is fully visible and fades
/// to the mirrored appearance only as the direct view degrades.
struct PixelMap {
    int width = 0;
    int height = 0;
    std::vector<Vec2> source;          ///< direct source pixel coordinate
    std::vector<double> weight;        ///< direct visibility weight in [0,1]
    std::vector<Vec2> mirror_source;   ///< mirrored-surface source pixel coordinate
    std::vector<double> mirror_weight; ///< attenuated mirrored weight in [0,1]
    std::vector<std::uint8_t> mask;    ///< head hit flag
    std::vector<Vec3> normal;          ///< head-frame unit normal at the hit, zero off-mask

    std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
};

inline constexpr double kVisibilityCosLo = 0.1;
inline constexpr double kVisibilityCosHi = 0.4;

/// 0 when occluded, otherwise a cubic smoothstep of cos = max(0, -n . d)
/// between kVisibilityCosLo and kVisibilityCosHi. `view_dir` points from the
/// camera into the scene; both vectors unit length.
double visibility_weight(const Vec3& normal, const Vec3& view_dir, bool occluded);

/// Casts one target ray per output pixel, recording direct and mirrored
/// source coordinates with their visibility weights. Occlusion is tested by
/// re-casting a biased ray from the surface point toward the source camera.
PixelMap compute_pixel_map(const HeadGeometry& geometry, const OrthographicCamera& target,
                           int width, int height);

struct FaceLayer {
    Image8 color;  ///< 3-channel
    ImageF alpha;  ///< min(1, direct weight + mirrored weight) on mask, else 0
};

/// Bilinear-samples the source at the direct and mirrored coordinates and
/// blends them by their weights; out-of-bounds samples contribute weight 0.
FaceLayer resample(const Image8& source, const PixelMap& map);

/// Warps the whole source frame into the target view through a plane parallel
/// to the source image plane at the median silhouette depth. For two
/// orthographic cameras this induced map is affine; applied with bilinear
/// sampling and edge-clamp padding.
Image8 background_warp(const Image8& source, const HeadGeometry& geometry,
                       const OrthographicCamera& target, int width, int height);

struct RenderLayers {
    FaceLayer face;
    Image8 background;
    ImageF feathered_alpha;
};

///// Full pose-jitter render: face layer over the planar background warp, with
/// the mask boundary feathered by a 2 px Gaussian. `layers`, when given,
/// receives the intermediate layers for debugging.
Image8 render_pose(const Image8& source, const MorphableModel& model, const FitResult& fit,
                   int image_index, const PoseSpec& pose, RenderLayers* layers = nullptr);

/// Nearest-hit depth per pixel (distance in front of the camera plane grows
/// away from the camera); +infinity off the head.
ImageF render_depth(const HeadGeometry& geometry, const OrthographicCamera& camera,
                    int width, int height);

} // namespace facejitter
