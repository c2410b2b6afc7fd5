/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/core/mesh.hpp
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

#include <array>
#include <vector>

#include "facejitter/core/types.hpp"

namespace facejitter {

/// The 68-point iBUG landmark layout. Ids 0-16 run along the jawline and are
/// viewpoint-dependent (their mesh anchor slides along the occluding contour);
/// ids 17-67 are interior features with a fixed anchor vertex.
inline constexpr int kNumLandmarks = 68;
inline constexpr int kContourLandmarkEnd = 17; // ids [0, 17) are contour class

struct LandmarkAnchor {
    int vertex = -1;         ///< anchor vertex; for contour ids this is the frontal (nominal) anchor
    bool contour = false;    ///< true for jawline ids, whose anchor is reselected per pose
};

/// Fixed triangle connectivity plus the vertex-level annotations the pipeline
/// needs: landmark anchors, the bilateral symmetry involution, and the strip
/// of candidate vertices the jawline landmarks may slide over.
struct MeshTopology {
    int vertex_count = 0;
    std::vector<std::array<int, 3>> triangles;
    std::vector<LandmarkAnchor> landmarks;   ///< size kNumLandmarks, indexed by landmark id
    std::vector<int> symmetry;               ///< per vertex: index of its mirror (involution)
    std::vector<int> contour_band;           ///< candidate vertices for contour landmark selection

    /// Throws std::invalid_argument on any violated structural invariant
    /// (indices out of range, degenerate triangles, non-involutive symmetry,
    /// incomplete landmark coverage).
    void validate() const;
};

struct VertexNormals {
    std::vector<Vec3> normals;       ///< unit, or zero for isolated vertices
    std::vector<int> isolated;       ///< vertices with no incident triangle
};

/// Angle-weighted per-vertex normals (each incident face normal weighted by
/// the corner angle at the vertex, normalized). Orientation follows the
/// triangle winding; the synthetic head template winds outward.
VertexNormals vertex_normals(const VertexSet& vertices, const MeshTopology& topology);

} // namespace facejitter
