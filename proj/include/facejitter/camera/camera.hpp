/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/camera/camera.hpp
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

#include <iosfwd>
#include <string>
#include <vector>

#include "facejitter/core/types.hpp"

namespace facejitter {

/// Rotation convention used by the whole project, defined here once:
///
///   R = R_roll(z) * R_pitch(x) * R_yaw(y)
///
/// applied to head coordinates (+x subject's left, +y down, +z towards a
/// frontal camera). The camera looks along -z of its own frame, so a point's
/// camera-space z decreases with distance from the camera. Angles are radians.
inline constexpr const char* kRotationConvention = "z-roll.x-pitch.y-yaw";

/// Builds the rotation matrix for the convention above.
Mat3 angles_to_rotation(double yaw, double pitch, double roll);

struct EulerAngles {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
    bool gimbal_lock = false; ///< |pitch| at pi/2; roll conventionally reported as 0
};

/// Recovers (yaw, pitch, roll) from an orthonormal rotation matrix. Away from
/// gimbal lock (|pitch| < pi/2) the round trip through angles_to_rotation is
/// the identity.
EulerAngles rotation_to_angles(const Mat3& rotation);

/// Scaled orthographic camera: pixel = s * (R * x)_xy + t.
struct OrthographicCamera {
    double scale = 1.0;  ///< pixels per millimetre, > 0
    Vec2 offset = Vec2::Zero();
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;

    Mat3 rotation() const { return angles_to_rotation(yaw, pitch, roll); }

    /// The 2x3 linear part s * R_xy (projection without the offset).
    Eigen::Matrix<double, 2, 3> linear() const;
};

/// Projects a 3-d point (mm) to pixel coordinates; the depth coordinate is
/// discarded after rotation.
Vec2 project(const OrthographicCamera& camera, const Vec3& point);

/// Unconstrained affine camera: pixel = M * x + t.
struct AffineCamera {
    Eigen::Matrix<double, 2, 3> linear = Eigen::Matrix<double, 2, 3>::Zero();
    Vec2 offset = Vec2::Zero();
};

Vec2 project(const AffineCamera& camera, const Vec3& point);

/// Least-squares affine camera from 2-d/3-d correspondences. Requires at
/// least 4 points in non-coplanar position; throws DegenerateConfiguration
/// when the centered normal system's condition number exceeds 1e8.
AffineCamera estimate_affine_camera(const std::vector<Vec3>& points,
                                    const std::vector<Vec2>& pixels,
                                    const std::vector<double>& weights = {});

struct DecomposedCamera {
    OrthographicCamera camera;
    /// Upper-triangular factor left over after pulling out the uniform scale;
    /// has unit mean diagonal. Diagnostic only, never applied downstream.
    Eigen::Matrix2d residual = Eigen::Matrix2d::Identity();
};

/// Splits an affine camera into scaled-orthographic parameters via RQ
/// decomposition of the 2x3 linear part (implemented as QR of the
/// permuted transpose with sign correction). The third rotation row is
/// completed by cross product. Throws DegenerateConfiguration when the
/// linear part is rank deficient.
DecomposedCamera decompose_affine(const AffineCamera& affine);

/// Rebuilds the affine camera a decomposition came from: M = s * residual * R_xy.
AffineCamera compose_affine(const DecomposedCamera& decomposed);

/// JSON-text record {scale, t_u, t_v, yaw, pitch, roll, convention}.
std::string camera_to_json(const OrthographicCamera& camera);
OrthographicCamera camera_from_json(const std::string& json_text);

} // namespace facejitter
