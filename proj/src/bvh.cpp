/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/bvh.cpp
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
#include "facejitter/render/bvh.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace facejitter {

std::optional<RayHit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b,
                                         const Vec3& c, int triangle_id) {
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 p = ray.direction.cross(e2);
    const double det = e1.dot(p);
    if (det == 0.0) return std::nullopt; // parallel or degenerate
    const double inv_det = 1.0 / det;
    const Vec3 s = ray.origin - a;
    const double u = s.dot(p) * inv_det;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 q = s.cross(e1);
    const double v = ray.direction.dot(q) * inv_det;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = e2.dot(q) * inv_det;
    if (t <= 0.0) return std::nullopt;
    return RayHit{triangle_id, t, Vec3(1.0 - u - v, u, v)};
}

namespace {

constexpr int kLeafSize = 4;

// Slab test against [lo, hi]; returns entry distance (clamped at 0) or
// nothing on a miss. Inclusive boundaries so hits lying exactly on a face
// are never pruned away.
std::optional<double> box_entry(const Ray& ray, const Vec3& lo, const Vec3& hi) {
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 3; ++axis) {
        const double o = ray.origin(axis);
        const double d = ray.direction(axis);
        if (d == 0.0) {
            if (o < lo(axis) || o > hi(axis)) return std::nullopt;
            continue;
        }
        double near = (lo(axis) - o) / d;
        double far = (hi(axis) - o) / d;
        if (near > far) std::swap(near, far);
        t0 = std::max(t0, near);
        t1 = std::min(t1, far);
        if (t0 > t1) return std::nullopt;
    }
    return t0;
}

} // namespace

TriangleBVH::TriangleBVH(const VertexSet& vertices,
                         const std::vector<std::array<int, 3>>& triangles) {
    if (triangles.empty()) throw std::invalid_argument("bvh: empty mesh");
    const int n = static_cast<int>(triangles.size());
    corners_.resize(3 * n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) corners_[3 * i + k] = vertices.row(triangles[i][k]).transpose();
    }
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = i;
    triangle_ids_.reserve(n);
    nodes_.reserve(2 * n);
    build(ids, 0, n);
}

int TriangleBVH::build(std::vector<int>& ids, int first, int count) {
    const int node_index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    Vec3 centroid_lo = lo, centroid_hi = hi;
    for (int i = first; i < first + count; ++i) {
        Vec3 c = Vec3::Zero();
        for (int k = 0; k < 3; ++k) {
            const Vec3& p = corners_[3 * ids[i] + k];
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
            c += p;
        }
        c /= 3.0;
        centroid_lo = centroid_lo.cwiseMin(c);
        centroid_hi = centroid_hi.cwiseMax(c);
    }
    nodes_[node_index].lo = lo;
    nodes_[node_index].hi = hi;

    int axis = 0;
    (centroid_hi - centroid_lo).maxCoeff(&axis);
    const bool splittable = count > kLeafSize && centroid_hi(axis) > centroid_lo(axis);
    if (!splittable) {
        nodes_[node_index].first = static_cast<int>(triangle_ids_.size());
        nodes_[node_index].count = count;
        for (int i = first; i < first + count; ++i) triangle_ids_.push_back(ids[i]);
        return node_index;
    }

    const int mid = first + count / 2;
    std::nth_element(ids.begin() + first, ids.begin() + mid, ids.begin() + first + count,
                     [&](int a, int b) {
                         const double ca = corners_[3 * a](axis) + corners_[3 * a + 1](axis) +
                                           corners_[3 * a + 2](axis);
                         const double cb = corners_[3 * b](axis) + corners_[3 * b + 1](axis) +
                                           corners_[3 * b + 2](axis);
                         return ca < cb;
                     });
    nodes_[node_index].left = build(ids, first, mid - first);
    nodes_[node_index].right = build(ids, mid, first + count - mid);
    return node_index;
}

std::optional<RayHit> TriangleBVH::intersect(const Ray& ray, IntersectStats* stats) const {
    std::optional<RayHit> best;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (stats) ++stats->box_tests;
        const auto entry = box_entry(ray, node.lo, node.hi);
        // Equal-depth candidates must still be visited for the id tie-break.
        if (!entry || (best && *entry > best->depth)) continue;
        if (node.count > 0) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                const int id = triangle_ids_[i];
                if (stats) ++stats->triangle_tests;
                const auto hit = intersect_triangle(ray, corners_[3 * id], corners_[3 * id + 1],
                                                    corners_[3 * id + 2], id);
                if (!hit) continue;
                if (!best || hit->depth < best->depth ||
                    (hit->depth == best->depth && hit->triangle < best->triangle)) {
                    best = hit;
                }
            }
        } else {
            stack[top++] = node.right;
            stack[top++] = node.left;
        }
    }
    return best;
}

double TriangleBVH::bbox_diagonal() const {
    return (nodes_[0].hi - nodes_[0].lo).norm();
}

std::pair<Vec3, Vec3> TriangleBVH::bounds() const {
    return {nodes_[0].lo, nodes_[0].hi};
}

TriangleBVH build_bvh(const VertexSet& vertices, const MeshTopology& topology) {
    return TriangleBVH(vertices, topology.triangles);
}

} // namespace facejitter
