/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/fitting/fitting.hpp
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
#include <string>
#include <vector>

#include "facejitter/camera/camera.hpp"
#include "facejitter/morphablemodel/morphable_model.hpp"

namespace facejitter {

struct LandmarkPoint {
    int id = -1;
    Vec2 pixel = Vec2::Zero();
    double confidence = 1.0;
};

/// Detected 2-d landmarks of one image. Points may cover any subset of the
/// 68-point scheme; ids must be unique within a set.
struct LandmarkSet {
    std::string image_id;
    std::vector<LandmarkPoint> points;

    /// Throws std::invalid_argument on duplicate or out-of-range ids,
    /// non-finite positions, or confidence outside [0, 1].
    void validate() const;
};

struct FitConfig {
    int max_iterations = 10;
    double tol_px = 0.05;      ///< outer-iteration RMS change below this converges
    double clamp_sigmas = 3.0; ///< elementwise coefficient clamp, sigma units
    double lambda = 1e-3;      ///< Tikhonov row weight

    void validate() const;
};

/// Joint estimate: one shared subject vector, one expression vector and one
/// camera per image. Immutable after fit() returns.
struct FitResult {
    std::vector<std::string> image_ids;
    Eigen::VectorXd alpha;
    std::vector<Eigen::VectorXd> beta;
    std::vector<OrthographicCamera> cameras;
    std::vector<bool> used;                 ///< image contributed to the final solve
    std::vector<double> rms_px;             ///< per image, final reprojection RMS (-1 if never solved)
    std::vector<Eigen::VectorXd> residuals; ///< per image, stacked (du, dv) at the final solve
    std::vector<double> rms_trajectory;     ///< global RMS after each outer iteration
    int iterations = 0;
    bool converged = false;

    int image_count() const { return static_cast<int>(image_ids.size()); }
    ShapeCoefficients coefficients(int image_index) const;
    int index_of(const std::string& image_id) const; ///< -1 when absent
};

/// Weight of the normalized projected distance term in the contour anchor
/// score relative to the squared silhouette term.
inline constexpr double kContourDistanceWeight = 1.0;

/// Contour search window: a contour landmark only considers band candidates
/// whose projection lies within this fraction of the projected band size
/// (half bounding-box diagonal times camera scale) of its nominal anchor.
inline constexpr double kContourWindowFrac = 0.30;

/// Per-landmark anchor vertices ignoring the camera (contour landmarks keep
/// their frontal nominal anchor).
std::array<int, kNumLandmarks> nominal_anchor_vertices(const MeshTopology& topology);

/// Per-landmark anchor vertices for a given shape and camera. Interior
/// landmarks keep their fixed anchor. Each contour landmark searches the jaw
/// band inside its local window (kContourWindowFrac) and takes the candidate
/// minimizing (n . view)^2 + kContourDistanceWeight * dist / window, where
/// dist is the projected distance to the nominal anchor; ties break to the
/// lowest vertex index. An empty window keeps the nominal anchor. The score
/// is invariant to camera scale and offset.
std::array<int, kNumLandmarks> anchor_vertices(const MeshTopology& topology,
                                               const VertexSet& vertices,
                                               const OrthographicCamera& camera);

/// Current 3-d position (mm) of every landmark's anchor under the given
/// camera and coefficients.
std::vector<Vec3> landmark_anchor_points(const MorphableModel& model,
                                         const OrthographicCamera& camera,
                                         const ShapeCoefficients& coeffs);

/// The assembled block least-squares system: rows grouped by image, columns
/// [alpha | beta_0 | ... | beta_N], Tikhonov rows appended.
struct LandmarkSystem {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd rhs;
    int subject_count = 0;
    int expression_count = 0;
    int image_count = 0;
};

/// Builds the block system over the given images. Residuals are taken against
/// the projected mean-shape anchor positions; rows are scaled by landmark
/// confidence; lambda * I rows (zero rhs) regularize alpha and each beta
/// block. Throws std::invalid_argument on an empty landmark set.
LandmarkSystem assemble_system(const MorphableModel& model,
                               const std::vector<LandmarkSet>& landmark_sets,
                               const std::vector<OrthographicCamera>& cameras,
                               const std::vector<std::array<int, kNumLandmarks>>& anchors,
                               double lambda);

struct SolvedCoefficients {
    Eigen::VectorXd alpha;
    std::vector<Eigen::VectorXd> beta;
};

/// Minimum-norm least-squares solution by SVD; singular values below
/// 1e-10 * sigma_max are truncated, then coefficients clamp to
/// +- clamp_sigmas elementwise.
SolvedCoefficients solve_coefficients(const LandmarkSystem& system, double clamp_sigmas);

/// Alternates camera estimation (DLT + RQ) with the block coefficient solve,
/// starting from the mean shape, until the global reprojection RMS settles or
/// max_iterations is hit. Images whose camera estimation degenerates are
/// dropped from that solve with a warning on stderr; if every image drops,
/// throws FitFailure.
FitResult fit(const MorphableModel& model, const std::vector<LandmarkSet>& landmark_sets,
              const FitConfig& config = {});

/// Landmark file round trip: JSON text, one record per image
/// {"image": id, "points": [[landmark id, u, v, confidence], ...]}.
std::string landmarks_to_json(const std::vector<LandmarkSet>& sets);
std::vector<LandmarkSet> landmarks_from_json(const std::string& json_text);

/// FitResult round trip as JSON text (cameras, coefficients, diagnostics).
std::string fit_result_to_json(const FitResult& result);
FitResult fit_result_from_json(const std::string& json_text);

} // namespace facejitter
