/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/synthetic.cpp
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
#include "facejitter/morphablemodel/synthetic.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "facejitter/core/rng.hpp"

namespace facejitter {

const int kLandmarkMirror[kNumLandmarks] = {
    16, 15, 14, 13, 12, 11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0, // jaw
    26, 25, 24, 23, 22, 21, 20, 19, 18, 17,                   // brows
    27, 28, 29, 30, 35, 34, 33, 32, 31,                       // nose
    45, 44, 43, 42, 47, 46, 39, 38, 37, 36, 41, 40,           // eyes
    54, 53, 52, 51, 50, 49, 48, 59, 58, 57, 56, 55,           // outer lips
    64, 63, 62, 61, 60, 67, 66, 65,                           // inner lips
};

namespace {

constexpr double kPi = std::numbers::pi;

// Base ellipsoid half-axes in millimetres: width (x), height (y), depth (z).
constexpr double kRadiusX = 70.0;
constexpr double kRadiusY = 92.0;
constexpr double kRadiusZ = 78.0;

// Identity parameters. Neutral values reproduce the template.
struct SubjectParams {
    double scale_x = 1.0;
    double scale_y = 1.0;
    double scale_z = 1.0;
    double jaw_width = 1.0;    // lateral scale of the lower face
    double chin_depth = 5.0;   // mm, forward chin bump
    double nose_length = 16.0; // mm, forward nose bump
    double nose_width = 1.0;   // azimuthal width factor of the nose
    double brow_depth = 3.0;   // mm, brow ridge
    double cheek_depth = 3.0;  // mm, cheekbones
};

// Expression parameters, all zero in the neutral pose.
struct ExpressionParams {
    double mouth_open = 0.0; // mm, jaw drop
    double smile = 0.0;      // mm, mouth corner pull (negative frowns)
    double brow_raise = 0.0; // mm, brow lift
    double lip_purse = 0.0;  // mm, lips pushed forward
};

double smoothstep(double lo, double hi, double x) {
    const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Separable Gaussian bump centred at (t0, p0) in (azimuth, polar) coordinates.
double bump(double theta, double t0, double tw, double phi, double p0, double pw) {
    const double a = (theta - t0) / tw;
    const double b = (phi - p0) / pw;
    return std::exp(-0.5 * (a * a + b * b));
}

// Head surface position for azimuth theta in (-pi, pi] (0 = facing the
// camera, positive toward the subject's left) and polar angle phi in [0, pi]
// (0 = top of head). Every term is even in theta except the deliberate
// odd lateral component of the smile, so that mirroring theta mirrors x
// exactly and leaves y and z unchanged.
Vec3 head_surface(double theta, double phi, const SubjectParams& s, const ExpressionParams& e) {
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double st = std::sin(theta), ct = std::cos(theta);

    // Lower face narrows toward the chin; jaw_width widens or narrows it.
    const double taper = 1.0 - 0.22 * smoothstep(0.55 * kPi, 0.95 * kPi, phi);
    const double lat = 1.0 + (s.jaw_width - 1.0) * smoothstep(0.50 * kPi, 0.80 * kPi, phi);

    double x = kRadiusX * s.scale_x * sp * st * taper * lat;
    double y = kRadiusY * s.scale_y * -cp;
    double z = kRadiusZ * s.scale_z * sp * ct;

    // Identity features (forward bumps along +z).
    z += s.nose_length * bump(theta, 0.0, 0.22 * s.nose_width, phi, 0.565 * kPi, 0.085 * kPi);
    z += s.brow_depth * std::exp(-0.5 * (phi - 0.40 * kPi) * (phi - 0.40 * kPi) / (0.035 * kPi * 0.035 * kPi)) *
         std::exp(-0.5 * (theta / 0.45) * (theta / 0.45));
    z -= 3.0 * (bump(theta, -0.35, 0.14, phi, 0.455 * kPi, 0.030 * kPi) +
                bump(theta, 0.35, 0.14, phi, 0.455 * kPi, 0.030 * kPi)); // eye sockets
    z += s.cheek_depth * (bump(theta, -0.62, 0.20, phi, 0.60 * kPi, 0.05 * kPi) +
                          bump(theta, 0.62, 0.20, phi, 0.60 * kPi, 0.05 * kPi));
    z += (2.0 + e.lip_purse) * std::exp(-0.5 * (phi - 0.745 * kPi) * (phi - 0.745 * kPi) / (0.022 * kPi * 0.022 * kPi)) *
         std::exp(-0.5 * (theta / 0.30) * (theta / 0.30)); // lips
    z += s.chin_depth * bump(theta, 0.0, 0.28, phi, 0.90 * kPi, 0.05 * kPi);

    // Expression: jaw drop travels slightly downward as the mouth opens.
    const double drop_lo = (0.76 + 0.004 * e.mouth_open) * kPi;
    y += e.mouth_open * smoothstep(drop_lo, drop_lo + 0.12 * kPi, phi) *
         std::exp(-0.5 * (theta / 0.55) * (theta / 0.55));

    // Smile pulls the mouth corners outward (odd in theta) and upward.
    const double corner = 0.38 + 0.006 * e.smile;
    const double gl = bump(theta, -corner, 0.15, phi, 0.745 * kPi, 0.035 * kPi);
    const double gr = bump(theta, corner, 0.15, phi, 0.745 * kPi, 0.035 * kPi);
    x += 0.6 * e.smile * (gr - gl);
    y -= 0.4 * e.smile * (gr + gl);

    y -= e.brow_raise * std::exp(-0.5 * (phi - 0.40 * kPi) * (phi - 0.40 * kPi) / (0.04 * kPi * 0.04 * kPi)) *
         std::exp(-0.5 * (theta / 0.50) * (theta / 0.50));

    return {x, y, z};
}

// Lat-long grid indexing: vertex 0 is the top pole, rows 1..P-1 hold M
// vertices each, the bottom pole comes last.
struct Grid {
    int P; // latitude bands
    int M; // azimuthal segments, even

    int top() const { return 0; }
    int bottom() const { return (P - 1) * M + 1; }
    int at(int r, int j) const {
        j %= M;
        if (j < 0) j += M;
        return 1 + (r - 1) * M + j;
    }
    int count() const { return (P - 1) * M + 2; }
    double phi(int r) const { return kPi * r / P; }
    double theta(int j) const { return -kPi + 2.0 * kPi * j / M; }
};

// Fills the vertex matrix. Columns with theta > 0 are produced by mirroring
// the matching negative column so the two halves agree bitwise.
VertexSet compute_vertices(const Grid& g, const SubjectParams& s, const ExpressionParams& e) {
    VertexSet v(g.count(), 3);
    v.row(g.top()) = head_surface(0.0, 0.0, s, e).transpose();
    v.row(g.bottom()) = head_surface(0.0, kPi, s, e).transpose();
    for (int r = 1; r < g.P; ++r) {
        for (int j = 0; j <= g.M / 2; ++j) {
            v.row(g.at(r, j)) = head_surface(g.theta(j), g.phi(r), s, e).transpose();
        }
        for (int j = g.M / 2 + 1; j < g.M; ++j) {
            const Eigen::RowVector3d src = v.row(g.at(r, g.M - j));
            v.row(g.at(r, j)) = Eigen::RowVector3d(-src.x(), src.y(), src.z());
        }
    }
    return v;
}

// Landmark scheme definition for the subject-right half plus the midline.
// Mirrored ids are derived through the symmetry map so paired anchors are
// exact mirrors by construction.
struct LandmarkSpec {
    int id;
    double theta;
    double phi_over_pi;
};

std::vector<LandmarkSpec> defining_landmarks() {
    std::vector<LandmarkSpec> spec;
    // Jaw 0..8: ear level down to the chin along a smooth curve.
    for (int i = 0; i <= 8; ++i) {
        const double psi = (i - 8) / 8.0;
        const double a = psi * kPi / 2.0;
        spec.push_back({i, 1.45 * std::sin(a), 0.52 + 0.40 * std::pow(std::cos(a), 0.9)});
    }
    // Right brow 17..21.
    const double brow_theta[5] = {-0.62, -0.49, -0.37, -0.25, -0.13};
    const double brow_phi[5] = {0.415, 0.400, 0.392, 0.400, 0.415};
    for (int k = 0; k < 5; ++k) spec.push_back({17 + k, brow_theta[k], brow_phi[k]});
    // Nose bridge 27..30 and right/centre nostrils 31..33.
    const double bridge_phi[4] = {0.445, 0.490, 0.535, 0.578};
    for (int k = 0; k < 4; ++k) spec.push_back({27 + k, 0.0, bridge_phi[k]});
    spec.push_back({31, -0.20, 0.635});
    spec.push_back({32, -0.10, 0.635});
    spec.push_back({33, 0.0, 0.635});
    // Right eye 36..41: corners then upper and lower arcs.
    const double ec = -0.35, ep = 0.455, rt = 0.115, rp = 0.030;
    spec.push_back({36, ec - rt, ep});
    spec.push_back({37, ec - rt / 2, ep - rp});
    spec.push_back({38, ec + rt / 2, ep - rp});
    spec.push_back({39, ec + rt, ep});
    spec.push_back({40, ec + rt / 2, ep + rp});
    spec.push_back({41, ec - rt / 2, ep + rp});
    // Mouth: two ellipses around (0, 0.745 * pi). The outer ring walks 30
    // degree steps from the right corner over the top; the inner ring walks
    // 45 degree steps. Only the non-positive-theta half is listed.
    const double mp = 0.745;
    const auto ring = [&](int id, int k, int steps, double r_theta, double r_phi) {
        const double ang = kPi - 2.0 * kPi * k / steps;
        spec.push_back({id, r_theta * std::cos(ang), mp - r_phi * std::sin(ang)});
    };
    for (int k : {0, 1, 2, 3}) ring(48 + k, k, 12, 0.33, 0.045);  // 48..51
    for (int k : {9, 10, 11}) ring(48 + k, k, 12, 0.33, 0.045);   // 57..59
    for (int k : {0, 1, 2}) ring(60 + k, k, 8, 0.20, 0.022);      // 60..62
    for (int k : {6, 7}) ring(60 + k, k, 8, 0.20, 0.022);         // 66..67
    return spec;
}

int nearest_vertex(const Grid& g, double theta, double phi_over_pi, bool midline,
                   std::map<int, int>& taken) {
    int r0 = std::clamp(static_cast<int>(std::lround(phi_over_pi * g.P)), 1, g.P - 1);
    int j0 = static_cast<int>(std::lround((theta + kPi) / (2.0 * kPi) * g.M)) % g.M;
    if (midline) {
        // A self-mirrored landmark must anchor on the mirror-fixed column, so
        // collisions resolve along rows only. Ten midline landmarks always fit
        // the P - 1 >= 11 interior rows.
        for (int radius = 0; radius < g.P; ++radius) {
            for (const int sign : {-1, 1}) {
                const int r = r0 + sign * radius;
                if (r < 1 || r > g.P - 1) continue;
                const int idx = g.at(r, j0);
                if (!taken.count(idx)) {
                    taken[idx] = 1;
                    return idx;
                }
                if (radius == 0) break;
            }
        }
        throw std::runtime_error("landmark placement failed: midline column full");
    }
    // Deterministic outward search keeps anchors distinct on coarse grids.
    for (int radius = 0; radius < 4; ++radius) {
        for (int dr = -radius; dr <= radius; ++dr) {
            for (int dj = -radius; dj <= radius; ++dj) {
                if (std::max(std::abs(dr), std::abs(dj)) != radius) continue;
                const int r = r0 + dr;
                if (r < 1 || r > g.P - 1) continue;
                const int idx = g.at(r, j0 + dj);
                if (!taken.count(idx)) {
                    taken[idx] = 1;
                    return idx;
                }
            }
        }
    }
    throw std::runtime_error("landmark placement failed: grid too coarse");
}

MeshTopology build_topology(const Grid& g) {
    MeshTopology topo;
    topo.vertex_count = g.count();

    topo.triangles.reserve(2 * g.M * (g.P - 1));
    for (int j = 0; j < g.M; ++j) {
        topo.triangles.push_back({g.top(), g.at(1, j + 1), g.at(1, j)});
    }
    for (int r = 1; r < g.P - 1; ++r) {
        for (int j = 0; j < g.M; ++j) {
            const int a = g.at(r, j), b = g.at(r, j + 1);
            const int c = g.at(r + 1, j), d = g.at(r + 1, j + 1);
            // The diagonal flips across the midline so the triangulation is
            // mirror symmetric.
            if (j < g.M / 2) {
                topo.triangles.push_back({a, b, c});
                topo.triangles.push_back({b, d, c});
            } else {
                topo.triangles.push_back({a, b, d});
                topo.triangles.push_back({a, d, c});
            }
        }
    }
    for (int j = 0; j < g.M; ++j) {
        topo.triangles.push_back({g.bottom(), g.at(g.P - 1, j), g.at(g.P - 1, j + 1)});
    }

    topo.symmetry.resize(g.count());
    topo.symmetry[g.top()] = g.top();
    topo.symmetry[g.bottom()] = g.bottom();
    for (int r = 1; r < g.P; ++r) {
        for (int j = 0; j < g.M; ++j) {
            topo.symmetry[g.at(r, j)] = g.at(r, (g.M - j) % g.M);
        }
    }

    std::map<int, int> taken;
    std::array<int, kNumLandmarks> anchor;
    anchor.fill(-1);
    for (const LandmarkSpec& lm : defining_landmarks()) {
        anchor[lm.id] = nearest_vertex(g, lm.theta, lm.phi_over_pi,
                                       kLandmarkMirror[lm.id] == lm.id, taken);
    }
    for (int id = 0; id < kNumLandmarks; ++id) {
        if (anchor[id] < 0) {
            const int partner = kLandmarkMirror[id];
            anchor[id] = topo.symmetry[anchor[partner]];
        }
    }
    topo.landmarks.resize(kNumLandmarks);
    for (int id = 0; id < kNumLandmarks; ++id) {
        topo.landmarks[id] = {anchor[id], id < kContourLandmarkEnd};
    }

    // Candidate strip for occluding-contour reselection of the jaw anchors:
    // the lower half of the head between the ears.
    for (int r = 1; r < g.P; ++r) {
        const double p = g.phi(r) / kPi;
        if (p < 0.46 || p > 0.97) continue;
        for (int j = 0; j < g.M; ++j) {
            if (std::abs(g.theta(j)) <= 1.58) topo.contour_band.push_back(g.at(r, j));
        }
    }
    return topo;
}

SubjectParams sample_subject(Rng& rng) {
    SubjectParams s;
    s.scale_x = 1.0 + 0.06 * rng.uniform(-1.0, 1.0);
    s.scale_y = 1.0 + 0.06 * rng.uniform(-1.0, 1.0);
    s.scale_z = 1.0 + 0.06 * rng.uniform(-1.0, 1.0);
    s.jaw_width = 1.0 + 0.12 * rng.uniform(-1.0, 1.0);
    s.chin_depth = 5.0 + 3.5 * rng.uniform(-1.0, 1.0);
    s.nose_length = 16.0 + 5.0 * rng.uniform(-1.0, 1.0);
    s.nose_width = 1.0 + 0.22 * rng.uniform(-1.0, 1.0);
    s.brow_depth = 3.0 + 2.0 * rng.uniform(-1.0, 1.0);
    s.cheek_depth = 3.0 + 2.2 * rng.uniform(-1.0, 1.0);
    return s;
}

ExpressionParams sample_expression(Rng& rng) {
    ExpressionParams e;
    e.mouth_open = 6.0 + 6.0 * rng.uniform(-1.0, 1.0);
    e.smile = 3.0 + 5.0 * rng.uniform(-1.0, 1.0);
    e.brow_raise = 2.0 + 2.0 * rng.uniform(-1.0, 1.0);
    e.lip_purse = 1.5 + 1.5 * rng.uniform(-1.0, 1.0);
    return e;
}

} // namespace

HeadTemplate make_head_template(int latitude_bands, int segments) {
    if (latitude_bands < 12 || segments < 16 || segments % 2 != 0) {
        throw std::invalid_argument("head template: need latitude_bands >= 12 and even segments >= 16");
    }
    const Grid g{latitude_bands, segments};
    HeadTemplate t;
    t.topology = build_topology(g);
    t.base = compute_vertices(g, SubjectParams{}, ExpressionParams{});
    t.topology.validate();
    return t;
}

std::vector<VertexSet> gen_synthetic_population(const HeadTemplate& head_template,
                                                std::uint64_t seed, int count,
                                                PopulationMode mode) {
    if (count < 1) throw std::invalid_argument("population: count must be >= 1");
    // Recover the grid from the vertex count and the first fan size: the top
    // fan uses vertex 0 with ring vertices 1..M.
    int M = 0;
    for (const auto& tri : head_template.topology.triangles) {
        if (tri[0] == 0) ++M;
    }
    const int rings = (head_template.topology.vertex_count - 2) / M + 1;
    const Grid g{rings, M};

    std::vector<VertexSet> out;
    out.reserve(count);
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        if (mode == PopulationMode::subject) {
            out.push_back(compute_vertices(g, sample_subject(rng), ExpressionParams{}));
        } else {
            out.push_back(compute_vertices(g, SubjectParams{}, sample_expression(rng)));
        }
    }
    return out;
}

MorphableModel build_synthetic_model(std::uint64_t seed, int subject_count, int rank_subject,
                                     int rank_expression, int expression_count,
                                     int latitude_bands, int segments) {
    if (expression_count <= 0) expression_count = std::max(3, subject_count / 2);
    HeadTemplate t = make_head_template(latitude_bands, segments);

    const auto subjects = gen_synthetic_population(t, derive_seed(seed, "subjects", 0),
                                                   subject_count, PopulationMode::subject);
    const auto expressions = gen_synthetic_population(t, derive_seed(seed, "expressions", 0),
                                                      expression_count, PopulationMode::expression);

    rank_subject = std::min(rank_subject, subject_count - 1);
    rank_expression = std::min(rank_expression, expression_count - 1);
    PcaResult ps = build_pca_basis(subjects, rank_subject);
    PcaResult pe = build_pca_basis(expressions, rank_expression);

    MorphableModel model;
    model.topology = std::move(t.topology);
    model.mean = std::move(ps.mean);
    model.subject = std::move(ps.basis);
    model.expression = std::move(pe.basis);
    return model;
}

} // namespace facejitter
