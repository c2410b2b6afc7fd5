/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/fitting.cpp
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
#include "facejitter/fitting/fitting.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>

#include <json.hpp>

#include "facejitter/core/errors.hpp"

namespace facejitter {

using nlohmann::json;

void LandmarkSet::validate() const {
    std::set<int> seen;
    for (const LandmarkPoint& p : points) {
        if (p.id < 0 || p.id >= kNumLandmarks) {
            throw std::invalid_argument("landmark set: id out of range");
        }
        if (!seen.insert(p.id).second) {
            throw std::invalid_argument("landmark set: duplicate landmark id");
        }
        if (!std::isfinite(p.pixel.x()) || !std::isfinite(p.pixel.y())) {
            throw std::invalid_argument("landmark set: non-finite position");
        }
        if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
            throw std::invalid_argument("landmark set: confidence outside [0, 1]");
        }
    }
}

void FitConfig::validate() const {
    if (max_iterations <= 0 || tol_px <= 0.0 || clamp_sigmas <= 0.0 || lambda <= 0.0) {
        throw std::invalid_argument("fit config: all fields must be positive");
    }
}

ShapeCoefficients FitResult::coefficients(int image_index) const {
    return {alpha, beta.at(image_index)};
}

int FitResult::index_of(const std::string& image_id) const {
    for (int i = 0; i < image_count(); ++i) {
        if (image_ids[i] == image_id) return i;
    }
    return -1;
}

std::array<int, kNumLandmarks> nominal_anchor_vertices(const MeshTopology& topology) {
    std::array<int, kNumLandmarks> anchors;
    for (int id = 0; id < kNumLandmarks; ++id) anchors[id] = topology.landmarks[id].vertex;
    return anchors;
}

std::array<int, kNumLandmarks> anchor_vertices(const MeshTopology& topology,
                                               const VertexSet& vertices,
                                               const OrthographicCamera& camera) {
    std::array<int, kNumLandmarks> anchors = nominal_anchor_vertices(topology);
    if (topology.contour_band.empty()) return anchors;

    const VertexNormals vn = vertex_normals(vertices, topology);
    // View direction (camera towards scene) expressed in head coordinates.
    const Vec3 view = camera.rotation().transpose() * Vec3(0.0, 0.0, -1.0);

    const std::size_t band = topology.contour_band.size();
    std::vector<double> sil(band);
    std::vector<Vec2> px(band);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (std::size_t i = 0; i < band; ++i) {
        const int v = topology.contour_band[i];
        sil[i] = std::abs(vn.normals[static_cast<std::size_t>(v)].dot(view));
        px[i] = project(camera, vertices.row(v).transpose());
        lo = lo.cwiseMin(vertices.row(v).transpose());
        hi = hi.cwiseMax(vertices.row(v).transpose());
    }
    // Candidates are scored inside a local window so a landmark slides along
    // the nearby occluding rim instead of teleporting to wherever the band's
    // global silhouette minimum happens to sit.  The squared silhouette term
    // flattens near the rim, so the distance term anchors the choice to the
    // nominal position once the rim is reached; both terms are invariant to
    // camera scale and offset.
    const double window = kContourWindowFrac * camera.scale * 0.5 * (hi - lo).norm();

    for (int id = 0; id < kNumLandmarks; ++id) {
        if (!topology.landmarks[id].contour) continue;
        const Vec2 nominal_px = project(camera, vertices.row(anchors[id]).transpose());
        double best_score = std::numeric_limits<double>::infinity();
        int best_vertex = anchors[id];
        for (std::size_t i = 0; i < band; ++i) {
            const double dist = (px[i] - nominal_px).norm();
            if (dist > window) continue;
            const double score = sil[i] * sil[i] + kContourDistanceWeight * dist / window;
            const int v = topology.contour_band[i];
            if (score < best_score || (score == best_score && v < best_vertex)) {
                best_score = score;
                best_vertex = v;
            }
        }
        anchors[id] = best_vertex;
    }
    return anchors;
}

std::vector<Vec3> landmark_anchor_points(const MorphableModel& model,
                                         const OrthographicCamera& camera,
                                         const ShapeCoefficients& coeffs) {
    const VertexSet vertices = instantiate_shape(model, coeffs);
    const auto anchors = anchor_vertices(model.topology, vertices, camera);
    std::vector<Vec3> points(kNumLandmarks);
    for (int id = 0; id < kNumLandmarks; ++id) points[id] = vertices.row(anchors[id]).transpose();
    return points;
}

namespace {

// Rows of the sigma-scaled basis for one vertex, projected by the camera's
// 2x3 linear part: a 2 x k block.
Eigen::MatrixXd projected_basis_block(const Eigen::Matrix<double, 2, 3>& linear,
                                      const PcaBasis& basis, int vertex) {
    const Eigen::MatrixXd rows = basis.directions.middleRows(3 * vertex, 3);
    return linear * (rows * basis.sigmas.asDiagonal());
}

} // namespace

LandmarkSystem assemble_system(const MorphableModel& model,
                               const std::vector<LandmarkSet>& landmark_sets,
                               const std::vector<OrthographicCamera>& cameras,
                               const std::vector<std::array<int, kNumLandmarks>>& anchors,
                               double lambda) {
    const int n_images = static_cast<int>(landmark_sets.size());
    if (n_images == 0) throw std::invalid_argument("assemble_system: no landmark sets");
    if (cameras.size() != landmark_sets.size() || anchors.size() != landmark_sets.size()) {
        throw std::invalid_argument("assemble_system: cameras/anchors size mismatch");
    }
    const int ks = model.subject.count();
    const int ke = model.expression.count();

    int data_rows = 0;
    for (const LandmarkSet& set : landmark_sets) {
        if (set.points.empty()) throw std::invalid_argument("assemble_system: empty landmark set");
        data_rows += 2 * static_cast<int>(set.points.size());
    }
    const int cols = ks + n_images * ke;
    const int rows = data_rows + ks + n_images * ke;

    LandmarkSystem system;
    system.matrix = Eigen::MatrixXd::Zero(rows, cols);
    system.rhs = Eigen::VectorXd::Zero(rows);
    system.subject_count = ks;
    system.expression_count = ke;
    system.image_count = n_images;

    int row = 0;
    for (int n = 0; n < n_images; ++n) {
        const Eigen::Matrix<double, 2, 3> linear = cameras[n].linear();
        for (const LandmarkPoint& p : landmark_sets[n].points) {
            const int vertex = anchors[n][p.id];
            const Vec2 mean_px = project(cameras[n], model.mean.row(vertex).transpose());
            const double w = p.confidence;
            system.matrix.block(row, 0, 2, ks) = w * projected_basis_block(linear, model.subject, vertex);
            system.matrix.block(row, ks + n * ke, 2, ke) =
                w * projected_basis_block(linear, model.expression, vertex);
            system.rhs.segment<2>(row) = w * (p.pixel - mean_px);
            row += 2;
        }
    }
    system.matrix.block(row, 0, cols, cols) =
        lambda * Eigen::MatrixXd::Identity(cols, cols);
    return system;
}

SolvedCoefficients solve_coefficients(const LandmarkSystem& system, double clamp_sigmas) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(system.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;

    Eigen::VectorXd projected = svd.matrixU().transpose() * system.rhs;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        projected(i) = sv(i) > cutoff ? projected(i) / sv(i) : 0.0;
    }
    Eigen::VectorXd solution = svd.matrixV() * projected;
    solution = solution.cwiseMax(-clamp_sigmas).cwiseMin(clamp_sigmas);

    SolvedCoefficients out;
    out.alpha = solution.head(system.subject_count);
    out.beta.reserve(system.image_count);
    for (int n = 0; n < system.image_count; ++n) {
        out.beta.push_back(
            solution.segment(system.subject_count + n * system.expression_count, system.expression_count));
    }
    return out;
}

namespace {

struct ImageState {
    bool has_camera = false;
    OrthographicCamera camera;
    std::array<int, kNumLandmarks> anchors{};
};

double reprojection_rms(const LandmarkSet& set, const OrthographicCamera& camera,
                        const VertexSet& vertices, const std::array<int, kNumLandmarks>& anchors,
                        Eigen::VectorXd* residual_out) {
    Eigen::VectorXd residual(2 * set.points.size());
    double sum_sq = 0.0;
    int i = 0;
    for (const LandmarkPoint& p : set.points) {
        const Vec2 r = p.pixel - project(camera, vertices.row(anchors[p.id]).transpose());
        residual.segment<2>(2 * i) = r;
        sum_sq += r.squaredNorm();
        ++i;
    }
    if (residual_out) *residual_out = std::move(residual);
    return std::sqrt(sum_sq / (2.0 * set.points.size()));
}

} // namespace

FitResult fit(const MorphableModel& model, const std::vector<LandmarkSet>& landmark_sets,
              const FitConfig& config) {
    config.validate();
    if (landmark_sets.empty()) throw std::invalid_argument("fit: need at least one landmark set");
    for (const LandmarkSet& set : landmark_sets) {
        set.validate();
        if (set.points.empty()) throw std::invalid_argument("fit: empty landmark set");
    }

    const int n_images = static_cast<int>(landmark_sets.size());
    FitResult result;
    result.image_ids.reserve(n_images);
    for (const LandmarkSet& set : landmark_sets) result.image_ids.push_back(set.image_id);
    result.alpha = Eigen::VectorXd::Zero(model.subject.count());
    result.beta.assign(n_images, Eigen::VectorXd::Zero(model.expression.count()));
    result.cameras.assign(n_images, OrthographicCamera{});
    result.used.assign(n_images, false);
    result.rms_px.assign(n_images, -1.0); // -1 marks an image with no successful solve
    result.residuals.assign(n_images, Eigen::VectorXd());

    std::vector<ImageState> state(n_images);
    const auto nominal = nominal_anchor_vertices(model.topology);
    double prev_rms = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        // Pass 1: per-image camera, then anchors refreshed under that camera
        // so the coefficient solve never pairs pixels with stale anchors.
        std::vector<int> active;
        for (int n = 0; n < n_images; ++n) {
            const VertexSet vertices = instantiate_shape(model, {result.alpha, result.beta[n]});
            const auto estimate_from =
                [&](const std::array<int, kNumLandmarks>& anchors) -> OrthographicCamera {
                std::vector<Vec3> points;
                std::vector<Vec2> pixels;
                std::vector<double> weights;
                points.reserve(landmark_sets[n].points.size());
                for (const LandmarkPoint& p : landmark_sets[n].points) {
                    points.push_back(vertices.row(anchors[p.id]).transpose());
                    pixels.push_back(p.pixel);
                    weights.push_back(p.confidence);
                }
                return decompose_affine(estimate_affine_camera(points, pixels, weights)).camera;
            };
            try {
                state[n].anchors = state[n].has_camera
                                       ? anchor_vertices(model.topology, vertices, state[n].camera)
                                       : nominal;
                state[n].camera = estimate_from(state[n].anchors);
                state[n].anchors = anchor_vertices(model.topology, vertices, state[n].camera);
                state[n].camera = estimate_from(state[n].anchors);
                state[n].has_camera = true;
                active.push_back(n);
            } catch (const DegenerateConfiguration& e) {
                state[n].has_camera = false;
                std::cerr << "fit: image '" << landmark_sets[n].image_id
                          << "' dropped from iteration " << iter + 1 << ": " << e.what() << "\n";
            }
        }
        if (active.empty()) throw FitFailure("fit: camera estimation degenerate for every image");

        // Pass 2: joint coefficient solve over the active images.
        std::vector<LandmarkSet> active_sets;
        std::vector<OrthographicCamera> active_cameras;
        std::vector<std::array<int, kNumLandmarks>> active_anchors;
        for (int n : active) {
            active_sets.push_back(landmark_sets[n]);
            active_cameras.push_back(state[n].camera);
            active_anchors.push_back(state[n].anchors);
        }
        const SolvedCoefficients solved = solve_coefficients(
            assemble_system(model, active_sets, active_cameras, active_anchors, config.lambda),
            config.clamp_sigmas);

        result.alpha = solved.alpha;
        std::fill(result.used.begin(), result.used.end(), false);
        for (std::size_t i = 0; i < active.size(); ++i) {
            const int n = active[i];
            result.beta[n] = solved.beta[i];
            result.cameras[n] = state[n].camera;
            result.used[n] = true;
        }

        // Global RMS over the active images with the updated coefficients.
        double sum_sq = 0.0;
        int count = 0;
        for (int n : active) {
            const VertexSet vertices = instantiate_shape(model, {result.alpha, result.beta[n]});
            const double rms = reprojection_rms(landmark_sets[n], state[n].camera, vertices,
                                                state[n].anchors, &result.residuals[n]);
            result.rms_px[n] = rms;
            sum_sq += result.residuals[n].squaredNorm();
            count += static_cast<int>(result.residuals[n].size());
        }
        const double rms = std::sqrt(sum_sq / count);
        result.rms_trajectory.push_back(rms);
        result.iterations = iter + 1;
        if (std::abs(prev_rms - rms) < config.tol_px) {
            result.converged = true;
            break;
        }
        prev_rms = rms;
    }
    return result;
}

std::string landmarks_to_json(const std::vector<LandmarkSet>& sets) {
    json records = json::array();
    for (const LandmarkSet& set : sets) {
        json pts = json::array();
        for (const LandmarkPoint& p : set.points) {
            pts.push_back({p.id, p.pixel.x(), p.pixel.y(), p.confidence});
        }
        records.push_back({{"image", set.image_id}, {"points", pts}});
    }
    return records.dump(2);
}

std::vector<LandmarkSet> landmarks_from_json(const std::string& json_text) {
    json records;
    try {
        records = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("landmark file: ") + e.what());
    }
    if (!records.is_array()) throw IoError("landmark file: expected a top-level array");
    std::vector<LandmarkSet> sets;
    for (const json& rec : records) {
        LandmarkSet set;
        set.image_id = rec.at("image").get<std::string>();
        for (const json& p : rec.at("points")) {
            if (!p.is_array() || p.size() != 4) throw IoError("landmark file: point must be [id, u, v, confidence]");
            set.points.push_back({p[0].get<int>(), Vec2(p[1].get<double>(), p[2].get<double>()),
                                  p[3].get<double>()});
        }
        set.validate();
        sets.push_back(std::move(set));
    }
    return sets;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
    return v;
}

} // namespace

std::string fit_result_to_json(const FitResult& result) {
    json images = json::array();
    for (int n = 0; n < result.image_count(); ++n) {
        images.push_back({
            {"id", result.image_ids[n]},
            {"camera", json::parse(camera_to_json(result.cameras[n]))},
            {"beta", vector_to_json(result.beta[n])},
            {"used", static_cast<bool>(result.used[n])},
            {"rms_px", result.rms_px[n]},
            {"residual", vector_to_json(result.residuals[n])},
        });
    }
    json root = {
        {"format", "facejitter-fit"},
        {"alpha", vector_to_json(result.alpha)},
        {"images", images},
        {"rms_trajectory", result.rms_trajectory},
        {"iterations", result.iterations},
        {"converged", result.converged},
    };
    return root.dump(2);
}

FitResult fit_result_from_json(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("fit file: ") + e.what());
    }
    if (root.value("format", "") != "facejitter-fit") throw IoError("fit file: bad format tag");
    FitResult result;
    result.alpha = vector_from_json(root.at("alpha"));
    for (const json& img : root.at("images")) {
        result.image_ids.push_back(img.at("id").get<std::string>());
        result.cameras.push_back(camera_from_json(img.at("camera").dump()));
        result.beta.push_back(vector_from_json(img.at("beta")));
        result.used.push_back(img.at("used").get<bool>());
        result.rms_px.push_back(img.at("rms_px").get<double>());
        result.residuals.push_back(vector_from_json(img.at("residual")));
    }
    result.rms_trajectory = root.at("rms_trajectory").get<std::vector<double>>();
    result.iterations = root.at("iterations").get<int>();
    result.converged = root.at("converged").get<bool>();
    return result;
}

} // namespace facejitter
