/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/morphablemodel/morphable_model.hpp
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

#include <string>
#include <vector>

#include "facejitter/core/mesh.hpp"
#include "facejitter/core/types.hpp"

namespace facejitter {

/// One PCA basis: orthonormal directions (columns, flattened 3N layout) plus
/// the per-component sample standard deviation in millimetres. Coefficients
/// throughout the project are expressed in standard-deviation units, so a
/// component's millimetre displacement is direction * sigma * coefficient.
struct PcaBasis {
    Eigen::MatrixXd directions; ///< 3N x k, orthonormal columns, variance-ordered
    Eigen::VectorXd sigmas;     ///< k, non-increasing, >= 0

    int count() const { return static_cast<int>(sigmas.size()); }
};

/// Statistical head model: mean shape plus separate subject (identity) and
/// expression bases, composed additively.
struct MorphableModel {
    MeshTopology topology;
    VertexSet mean;       ///< N x 3, millimetres
    PcaBasis subject;
    PcaBasis expression;

    int vertex_count() const { return static_cast<int>(mean.rows()); }
};

struct ShapeCoefficients {
    Eigen::VectorXd alpha; ///< subject coefficients, sigma units
    Eigen::VectorXd beta;  ///< expression coefficients, sigma units

    static ShapeCoefficients zero(const MorphableModel& model) {
        return {Eigen::VectorXd::Zero(model.subject.count()),
                Eigen::VectorXd::Zero(model.expression.count())};
    }
};

/// V = mean + sum_i alpha_i * sigma_i * A_i + sum_j beta_j * sigma_j * B_j.
/// Throws std::invalid_argument on coefficient length mismatch.
VertexSet instantiate_shape(const MorphableModel& model, const ShapeCoefficients& coeffs);

struct PcaResult {
    VertexSet mean;
    PcaBasis basis;
};

/// PCA of a set of same-topology vertex sets, keeping `rank` components.
/// Directions come from a thin SVD of the centered sample matrix; sigmas use
/// the (n-1)-normalized sample convention. Requires >= 2 samples and
/// rank <= min(samples - 1, 3N).
PcaResult build_pca_basis(const std::vector<VertexSet>& samples, int rank);

/// Least-squares coefficients (sigma units) of a vertex set in a basis;
/// zero-variance components get coefficient 0.
Eigen::VectorXd project_coefficients(const VertexSet& mean, const PcaBasis& basis,
                                     const VertexSet& vertices);

/// Binary model container ("FJMM"): magic, format version, named sections
/// holding the topology, mean and both bases as little-endian 64-bit floats.
/// Reload is bit-exact.
void save_model(const std::string& path, const MorphableModel& model);
MorphableModel load_model(const std::string& path);

/// Lossless JSON-text twin of the binary container, for debugging and diffing.
void save_model_json(const std::string& path, const MorphableModel& model);
MorphableModel load_model_json(const std::string& path);

} // namespace facejitter
