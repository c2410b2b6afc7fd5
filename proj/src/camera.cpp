/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/camera.cpp
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
#include "facejitter/camera/camera.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "facejitter/core/errors.hpp"

namespace facejitter {

Mat3 angles_to_rotation(double yaw, double pitch, double roll) {
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double cr = std::cos(roll), sr = std::sin(roll);
    Mat3 ry, rx, rz;
    ry << cy, 0, sy,
          0, 1, 0,
          -sy, 0, cy;
    rx << 1, 0, 0,
          0, cp, -sp,
          0, sp, cp;
    rz << cr, -sr, 0,
          sr, cr, 0,
          0, 0, 1;
    return rz * rx * ry;
}

EulerAngles rotation_to_angles(const Mat3& r) {
    // With R = Rz(roll) Rx(pitch) Ry(yaw) the bottom row is
    // (-cp*sy, sp, cp*cy) and the middle column is (-sr*cp, cr*cp, sp).
    EulerAngles out;
    const double sp = std::clamp(r(2, 1), -1.0, 1.0);
    out.pitch = std::asin(sp);
    const double cp = std::cos(out.pitch);
    if (cp < 1e-9) {
        out.gimbal_lock = true;
        out.roll = 0.0;
        // At the pole only the sum/difference of yaw and roll is observable;
        // fold everything into yaw.
        out.yaw = std::atan2(r(0, 2), r(0, 0));
        return out;
    }
    out.yaw = std::atan2(-r(2, 0), r(2, 2));
    out.roll = std::atan2(-r(0, 1), r(1, 1));
    return out;
}

Eigen::Matrix<double, 2, 3> OrthographicCamera::linear() const {
    return scale * rotation().topRows<2>();
}

Vec2 project(const OrthographicCamera& camera, const Vec3& point) {
    const Vec3 rotated = camera.rotation() * point;
    return camera.scale * rotated.head<2>() + camera.offset;
}

Vec2 project(const AffineCamera& camera, const Vec3& point) {
    return camera.linear * point + camera.offset;
}

AffineCamera estimate_affine_camera(const std::vector<Vec3>& points,
                                    const std::vector<Vec2>& pixels,
                                    const std::vector<double>& weights) {
    if (points.size() != pixels.size()) {
        throw std::invalid_argument("correspondence list size mismatch");
    }
    if (points.size() < 4) {
        throw DegenerateConfiguration("affine camera estimation needs at least 4 points");
    }
    if (!weights.empty() && weights.size() != points.size()) {
        throw std::invalid_argument("weight list size mismatch");
    }

    // Centering the 3-d points decouples the translation and makes the normal
    // system's conditioning a purely geometric quantity.
    double wsum = 0.0;
    Vec3 centroid = Vec3::Zero();
    Vec2 pixel_mean = Vec2::Zero();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        centroid += w * points[i];
        pixel_mean += w * pixels[i];
        wsum += w;
    }
    if (wsum <= 0.0) {
        throw std::invalid_argument("weights sum to zero");
    }
    centroid /= wsum;
    pixel_mean /= wsum;

    Mat3 normal = Mat3::Zero();
    Eigen::Matrix<double, 3, 2> rhs = Eigen::Matrix<double, 3, 2>::Zero();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const Vec3 x = points[i] - centroid;
        const Vec2 u = pixels[i] - pixel_mean;
        normal += w * x * x.transpose();
        rhs += w * x * u.transpose();
    }

    const Eigen::SelfAdjointEigenSolver<Mat3> eig(normal);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e8) {
        throw DegenerateConfiguration("3-d points are (near-)coplanar; affine camera undetermined");
    }

    AffineCamera camera;
    camera.linear = normal.ldlt().solve(rhs).transpose();
    camera.offset = pixel_mean - camera.linear * centroid;
    return camera;
}

DecomposedCamera decompose_affine(const AffineCamera& affine) {
    const Eigen::Matrix<double, 2, 3>& m = affine.linear;

    // RQ via QR of the row-reversed transpose: with P the 2x2 exchange,
    // (P M)^T = Q~ R~ gives M = (P R~^T P) (P Q~^T), an upper-triangular
    // factor times a matrix with orthonormal rows.
    Eigen::Matrix2d perm;
    perm << 0, 1, 1, 0;
    const Eigen::Matrix<double, 3, 2> b = (perm * m).transpose();
    const Eigen::HouseholderQR<Eigen::Matrix<double, 3, 2>> qr(b);
    const Eigen::Matrix<double, 3, 2> q_thin =
        qr.householderQ() * Eigen::Matrix<double, 3, 2>::Identity();
    const Eigen::Matrix2d r_thin =
        qr.matrixQR().topRows<2>().triangularView<Eigen::Upper>();

    Eigen::Matrix2d k = perm * r_thin.transpose() * perm;
    Eigen::Matrix<double, 2, 3> rows = perm * q_thin.transpose();
    for (int i = 0; i < 2; ++i) {
        if (k(i, i) < 0) {
            k.col(i) = -k.col(i);
            rows.row(i) = -rows.row(i);
        }
    }
    if (!(k(0, 0) > 0.0) || !(k(1, 1) > 0.0)) {
        throw DegenerateConfiguration("affine linear part is rank deficient");
    }

    DecomposedCamera out;
    out.camera.scale = 0.5 * (k(0, 0) + k(1, 1));
    out.residual = k / out.camera.scale;
    out.camera.offset = affine.offset;

    Mat3 rotation;
    rotation.topRows<2>() = rows;
    rotation.row(2) = rows.row(0).cross(rows.row(1));
    const EulerAngles angles = rotation_to_angles(rotation);
    out.camera.yaw = angles.yaw;
    out.camera.pitch = angles.pitch;
    out.camera.roll = angles.roll;
    return out;
}

AffineCamera compose_affine(const DecomposedCamera& decomposed) {
    AffineCamera affine;
    affine.linear = decomposed.camera.scale * decomposed.residual *
                    decomposed.camera.rotation().topRows<2>();
    affine.offset = decomposed.camera.offset;
    return affine;
}

std::string camera_to_json(const OrthographicCamera& camera) {
    nlohmann::json j;
    j["scale"] = camera.scale;
    j["t_u"] = camera.offset.x();
    j["t_v"] = camera.offset.y();
    j["yaw"] = camera.yaw;
    j["pitch"] = camera.pitch;
    j["roll"] = camera.roll;
    j["convention"] = kRotationConvention;
    return j.dump();
}

OrthographicCamera camera_from_json(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    if (j.at("convention").get<std::string>() != kRotationConvention) {
        throw IoError("camera record uses unknown rotation convention");
    }
    OrthographicCamera camera;
    camera.scale = j.at("scale").get<double>();
    camera.offset = Vec2(j.at("t_u").get<double>(), j.at("t_v").get<double>());
    camera.yaw = j.at("yaw").get<double>();
    camera.pitch = j.at("pitch").get<double>();
    camera.roll = j.at("roll").get<double>();
    if (!(camera.scale > 0.0)) {
        throw IoError("camera record has non-positive scale");
    }
    return camera;
}

} // namespace facejitter
