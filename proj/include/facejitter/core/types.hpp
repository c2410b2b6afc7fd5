/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/core/types.hpp
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

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace facejitter {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Per-vertex 3-d positions in millimetres, one row per vertex.
///
/// Head coordinate frame (shared by every module): +x points to the
/// subject's left, +y points down (towards the chin), +z points out of the
/// face towards a frontal camera. This matches image coordinates (u right,
/// v down) under an identity rotation, so a frontal face renders upright.
using VertexSet = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Flattens an N x 3 vertex set to a 3N vector laid out [x0 y0 z0 x1 y1 z1 ...].
inline Eigen::VectorXd flatten(const VertexSet& vertices) {
    Eigen::VectorXd out(vertices.rows() * 3);
    for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
        out.segment<3>(3 * i) = vertices.row(i).transpose();
    }
    return out;
}

/// Inverse of flatten().
inline VertexSet unflatten(const Eigen::VectorXd& v) {
    VertexSet out(v.size() / 3, 3);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        out.row(i) = v.segment<3>(3 * i).transpose();
    }
    return out;
}

} // namespace facejitter
