/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/render/bvh.hpp
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

#include "facejitter/core/mesh.hpp"
#include "facejitter/core/types.hpp"

namespace facejitter {

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ(); ///< must be unit length
};

struct RayHit {
    int triangle = -1;
    double depth = 0.0;               ///< distance along the (unit) direction, > 0
    Vec3 barycentric = Vec3::Zero();  ///< weights of the triangle's three vertices, sum 1
};

struct IntersectStats {
    int box_tests = 0;
    int triangle_tests = 0;
};

/// Axis-aligned bounding-box tree over mesh triangles, median split on the
/// longest centroid axis. Immutable after build; concurrent queries are safe.
/// Queries return the nearest positive-depth hit with ties (equal depth)
/// resolved to the lowest triangle id, matching a brute-force scan exactly.
class TriangleBVH {
public:
    TriangleBVH(const VertexSet& vertices, const std::vector<std::array<int, 3>>& triangles);

    std::optional<RayHit> intersect(const Ray& ray, IntersectStats* stats = nullptr) const;

    /// Diagonal length of the root bounding box (occlusion-ray bias scale).
    double bbox_diagonal() const;

    /// Root bounding box corners.
    std::pair<Vec3, Vec3> bounds() const;

    int triangle_count() const { return static_cast<int>(triangle_ids_.size()); }
    int node_count() const { return static_cast<int>(nodes_.size()); }

private:
    struct Node {
        Vec3 lo, hi;
        int left = -1;  ///< internal: left child (right is left + subtree); leaf: -1
        int right = -1;
        int first = 0;  ///< leaf: range into triangle_ids_
        int count = 0;  ///< leaf: number of triangles; 0 for internal nodes
    };

    int build(std::vector<int>& ids, int first, int count);

    // Per-triangle vertex positions, flattened for cache-friendly tests.
    std::vector<Vec3> corners_;
    std::vector<int> triangle_ids_; ///< leaf ranges index this permutation
    std::vector<Node> nodes_;
};

/// Builds the tree; throws std::invalid_argument on an empty mesh.
TriangleBVH build_bvh(const VertexSet& vertices, const MeshTopology& topology);

/// Moeller-Trumbore test of one triangle; exact boundary acceptance
/// (u >= 0, v >= 0, u + v <= 1, depth > 0). Shared by tree and oracle scans.
std::optional<RayHit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b,
                                         const Vec3& c, int triangle_id);

} // namespace facejitter
