/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/mesh.cpp
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
#include "facejitter/core/mesh.hpp"

#include <stdexcept>
#include <string>

namespace facejitter {

void MeshTopology::validate() const {
    for (const auto& tri : triangles) {
        for (const int idx : tri) {
            if (idx < 0 || idx >= vertex_count) {
                throw std::invalid_argument("triangle index out of range: " + std::to_string(idx));
            }
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            throw std::invalid_argument("degenerate triangle (repeated vertex index)");
        }
    }
    if (static_cast<int>(symmetry.size()) != vertex_count) {
        throw std::invalid_argument("symmetry map size does not match vertex count");
    }
    for (int v = 0; v < vertex_count; ++v) {
        const int m = symmetry[v];
        if (m < 0 || m >= vertex_count || symmetry[m] != v) {
            throw std::invalid_argument("symmetry map is not an involution at vertex " +
                                        std::to_string(v));
        }
    }
    if (static_cast<int>(landmarks.size()) != kNumLandmarks) {
        throw std::invalid_argument("landmark map must cover all " +
                                    std::to_string(kNumLandmarks) + " landmark ids");
    }
    for (int id = 0; id < kNumLandmarks; ++id) {
        const auto& lm = landmarks[id];
        if (lm.vertex < 0 || lm.vertex >= vertex_count) {
            throw std::invalid_argument("landmark " + std::to_string(id) +
                                        " anchor vertex out of range");
        }
        if (lm.contour != (id < kContourLandmarkEnd)) {
            throw std::invalid_argument("landmark " + std::to_string(id) +
                                        " has wrong contour classification");
        }
    }
    for (const int v : contour_band) {
        if (v < 0 || v >= vertex_count) {
            throw std::invalid_argument("contour band vertex out of range");
        }
    }
}

VertexNormals vertex_normals(const VertexSet& vertices, const MeshTopology& topology) {
    if (vertices.rows() != topology.vertex_count) {
        throw std::invalid_argument("vertex count does not match topology");
    }
    VertexNormals result;
    result.normals.assign(static_cast<std::size_t>(topology.vertex_count), Vec3::Zero());
    std::vector<char> touched(static_cast<std::size_t>(topology.vertex_count), 0);

    const auto corner_angle = [](const Vec3& at, const Vec3& to_a, const Vec3& to_b) {
        const Vec3 u = to_a - at;
        const Vec3 v = to_b - at;
        return std::atan2(u.cross(v).norm(), u.dot(v));
    };
    for (const auto& tri : topology.triangles) {
        const Vec3 a = vertices.row(tri[0]);
        const Vec3 b = vertices.row(tri[1]);
        const Vec3 c = vertices.row(tri[2]);
        const Vec3 face = (b - a).cross(c - a);
        const double len = face.norm();
        for (const int idx : tri) touched[idx] = 1;
        if (len == 0.0) continue;
        // Incident-angle weighting keeps the average independent of how the
        // surrounding quads were split into triangles.
        const Vec3 unit = face / len;
        result.normals[tri[0]] += corner_angle(a, b, c) * unit;
        result.normals[tri[1]] += corner_angle(b, c, a) * unit;
        result.normals[tri[2]] += corner_angle(c, a, b) * unit;
    }
    for (int v = 0; v < topology.vertex_count; ++v) {
        if (!touched[v]) {
            result.isolated.push_back(v);
            continue;
        }
        const double len = result.normals[v].norm();
        if (len > 0.0) {
            result.normals[v] /= len;
        }
    }
    return result;
}

} // namespace facejitter
