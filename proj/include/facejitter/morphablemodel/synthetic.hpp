/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/morphablemodel/synthetic.hpp
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

#include <cstdint>
#include <vector>

#include "facejitter/morphablemodel/morphable_model.hpp"

namespace facejitter {

/// Mirror partner of each iBUG landmark id (self for midline landmarks).
extern const int kLandmarkMirror[kNumLandmarks];

/// Procedural head: a lat-long ellipsoid shell with smooth feature fields
/// (nose, brow, eye sockets, cheeks, lips, chin, jaw taper). `base` holds the
/// neutral shape; the topology carries the landmark anchors, the exact
/// bilateral symmetry map and the jaw-band contour candidate strip.
struct HeadTemplate {
    MeshTopology topology;
    VertexSet base;
};

/// Builds the template grid. `latitude_bands` is the number of polar steps
/// (>= 12); `segments` the number of azimuthal columns (even, >= 16). The
/// default resolution gives 2498 vertices / 4992 triangles.
HeadTemplate make_head_template(int latitude_bands = 40, int segments = 64);

enum class PopulationMode { subject, expression };

/// Deterministic sample population for PCA training. Subject mode varies
/// identity parameters (axis scales, jaw width, chin, nose, brow, cheeks) and
/// is exactly bilaterally symmetric; expression mode varies mouth opening,
/// smile, brow raise and lip pursing around the neutral template.
std::vector<VertexSet> gen_synthetic_population(const HeadTemplate& head_template,
                                                std::uint64_t seed, int count,
                                                PopulationMode mode);

/// Convenience wrapper: generate both populations and run PCA, yielding a
/// ready-to-use model. expression_count <= 0 means subject_count / 2.
MorphableModel build_synthetic_model(std::uint64_t seed, int subject_count, int rank_subject,
                                     int rank_expression, int expression_count = -1,
                                     int latitude_bands = 40, int segments = 64);

} // namespace facejitter
