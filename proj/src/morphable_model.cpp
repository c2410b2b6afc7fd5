/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/morphable_model.cpp
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
#include "facejitter/morphablemodel/morphable_model.hpp"

#include <Eigen/SVD>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "facejitter/core/errors.hpp"

namespace facejitter {

VertexSet instantiate_shape(const MorphableModel& model, const ShapeCoefficients& coeffs) {
    if (coeffs.alpha.size() != model.subject.count() ||
        coeffs.beta.size() != model.expression.count()) {
        throw std::invalid_argument("coefficient lengths do not match basis counts");
    }
    Eigen::VectorXd flat = flatten(model.mean);
    if (model.subject.count() > 0) {
        flat += model.subject.directions *
                (model.subject.sigmas.asDiagonal() * coeffs.alpha);
    }
    if (model.expression.count() > 0) {
        flat += model.expression.directions *
                (model.expression.sigmas.asDiagonal() * coeffs.beta);
    }
    return unflatten(flat);
}

PcaResult build_pca_basis(const std::vector<VertexSet>& samples, int rank) {
    const int n = static_cast<int>(samples.size());
    if (n < 2) {
        throw std::invalid_argument("PCA needs at least 2 samples");
    }
    const Eigen::Index rows = samples.front().rows();
    for (const auto& s : samples) {
        if (s.rows() != rows) {
            throw std::invalid_argument("PCA samples must share one topology");
        }
    }
    const Eigen::Index dim = rows * 3;
    if (rank < 0 || rank > std::min<Eigen::Index>(n - 1, dim)) {
        throw std::invalid_argument("PCA rank exceeds min(samples - 1, 3N)");
    }

    PcaResult result;
    result.mean = VertexSet::Zero(rows, 3);
    for (const auto& s : samples) result.mean += s;
    result.mean /= n;

    Eigen::MatrixXd centered(n, dim);
    const Eigen::VectorXd mean_flat = flatten(result.mean);
    for (int i = 0; i < n; ++i) {
        centered.row(i) = (flatten(samples[i]) - mean_flat).transpose();
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    result.basis.directions = svd.matrixV().leftCols(rank);
    result.basis.sigmas = svd.singularValues().head(rank) / std::sqrt(static_cast<double>(n - 1));
    return result;
}

Eigen::VectorXd project_coefficients(const VertexSet& mean, const PcaBasis& basis,
                                     const VertexSet& vertices) {
    const Eigen::VectorXd deviation = flatten(vertices) - flatten(mean);
    Eigen::VectorXd coeffs = basis.directions.transpose() * deviation;
    for (int k = 0; k < basis.count(); ++k) {
        coeffs[k] = basis.sigmas[k] > 0.0 ? coeffs[k] / basis.sigmas[k] : 0.0;
    }
    return coeffs;
}

// ---------------------------------------------------------------------------
// Binary container
// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little,
              "model container is little-endian; byte-swapping IO is not implemented");

constexpr char kMagic[4] = {'F', 'J', 'M', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void put_f64_array(std::ostream& out, const double* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
}

void get_f64_array(std::istream& in, double* data, std::size_t count) {
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void put_section_header(std::ostream& out, const std::string& name) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
}

std::string get_section_header(std::istream& in) {
    const std::uint32_t len = get_u32(in);
    if (len > 64) throw IoError("model file: implausible section name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    return name;
}

void put_basis(std::ostream& out, const PcaBasis& basis) {
    put_u32(out, static_cast<std::uint32_t>(basis.count()));
    put_u32(out, static_cast<std::uint32_t>(basis.directions.rows()));
    put_f64_array(out, basis.sigmas.data(), static_cast<std::size_t>(basis.sigmas.size()));
    put_f64_array(out, basis.directions.data(),
                  static_cast<std::size_t>(basis.directions.size()));
}

PcaBasis get_basis(std::istream& in) {
    PcaBasis basis;
    const std::uint32_t count = get_u32(in);
    const std::uint32_t rows = get_u32(in);
    basis.sigmas.resize(count);
    basis.directions.resize(rows, count);
    get_f64_array(in, basis.sigmas.data(), count);
    get_f64_array(in, basis.directions.data(), static_cast<std::size_t>(basis.directions.size()));
    return basis;
}

} // namespace

void save_model(const std::string& path, const MorphableModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    put_u32(out, kFormatVersion);

    put_section_header(out, "topology");
    put_u32(out, static_cast<std::uint32_t>(model.topology.vertex_count));
    put_u32(out, static_cast<std::uint32_t>(model.topology.triangles.size()));
    for (const auto& tri : model.topology.triangles) {
        for (const int idx : tri) put_u32(out, static_cast<std::uint32_t>(idx));
    }
    for (const auto& lm : model.topology.landmarks) {
        put_u32(out, static_cast<std::uint32_t>(lm.vertex));
        put_u32(out, lm.contour ? 1 : 0);
    }
    for (const int s : model.topology.symmetry) put_u32(out, static_cast<std::uint32_t>(s));
    put_u32(out, static_cast<std::uint32_t>(model.topology.contour_band.size()));
    for (const int v : model.topology.contour_band) put_u32(out, static_cast<std::uint32_t>(v));

    put_section_header(out, "mean");
    put_u32(out, static_cast<std::uint32_t>(model.mean.rows()));
    const Eigen::VectorXd mean_flat = flatten(model.mean);
    put_f64_array(out, mean_flat.data(), static_cast<std::size_t>(mean_flat.size()));

    put_section_header(out, "subject");
    put_basis(out, model.subject);
    put_section_header(out, "expression");
    put_basis(out, model.expression);

    if (!out) throw IoError("short write to '" + path + "'");
}

MorphableModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("'" + path + "' is not a model container");
    }
    const std::uint32_t version = get_u32(in);
    if (version != kFormatVersion) {
        throw IoError("unsupported model format version " + std::to_string(version));
    }

    MorphableModel model;
    if (get_section_header(in) != "topology") throw IoError("model file: expected topology section");
    model.topology.vertex_count = static_cast<int>(get_u32(in));
    const std::uint32_t tri_count = get_u32(in);
    model.topology.triangles.resize(tri_count);
    for (auto& tri : model.topology.triangles) {
        for (int& idx : tri) idx = static_cast<int>(get_u32(in));
    }
    model.topology.landmarks.resize(kNumLandmarks);
    for (auto& lm : model.topology.landmarks) {
        lm.vertex = static_cast<int>(get_u32(in));
        lm.contour = get_u32(in) != 0;
    }
    model.topology.symmetry.resize(model.topology.vertex_count);
    for (int& s : model.topology.symmetry) s = static_cast<int>(get_u32(in));
    model.topology.contour_band.resize(get_u32(in));
    for (int& v : model.topology.contour_band) v = static_cast<int>(get_u32(in));

    if (get_section_header(in) != "mean") throw IoError("model file: expected mean section");
    const std::uint32_t rows = get_u32(in);
    Eigen::VectorXd mean_flat(static_cast<Eigen::Index>(rows) * 3);
    get_f64_array(in, mean_flat.data(), static_cast<std::size_t>(mean_flat.size()));
    model.mean = unflatten(mean_flat);

    if (get_section_header(in) != "subject") throw IoError("model file: expected subject section");
    model.subject = get_basis(in);
    if (get_section_header(in) != "expression") throw IoError("model file: expected expression section");
    model.expression = get_basis(in);

    if (!in) throw IoError("truncated model file '" + path + "'");
    model.topology.validate();
    return model;
}

// ---------------------------------------------------------------------------
// JSON twin
// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    }
    return m;
}

nlohmann::json basis_to_json(const PcaBasis& basis) {
    nlohmann::json j;
    j["sigmas"] = std::vector<double>(basis.sigmas.data(), basis.sigmas.data() + basis.sigmas.size());
    j["directions"] = matrix_to_json(basis.directions);
    return j;
}

PcaBasis basis_from_json(const nlohmann::json& j) {
    PcaBasis basis;
    const auto sig = j.at("sigmas").get<std::vector<double>>();
    basis.sigmas = Eigen::Map<const Eigen::VectorXd>(sig.data(), static_cast<Eigen::Index>(sig.size()));
    basis.directions = matrix_from_json(j.at("directions"));
    return basis;
}

} // namespace

void save_model_json(const std::string& path, const MorphableModel& model) {
    nlohmann::json j;
    j["format"] = "facejitter-model";
    j["version"] = kFormatVersion;
    j["topology"]["vertex_count"] = model.topology.vertex_count;
    j["topology"]["triangles"] = model.topology.triangles;
    nlohmann::json lms = nlohmann::json::array();
    for (const auto& lm : model.topology.landmarks) {
        lms.push_back({{"vertex", lm.vertex}, {"contour", lm.contour}});
    }
    j["topology"]["landmarks"] = std::move(lms);
    j["topology"]["symmetry"] = model.topology.symmetry;
    j["topology"]["contour_band"] = model.topology.contour_band;
    j["mean"] = matrix_to_json(model.mean);
    j["subject"] = basis_to_json(model.subject);
    j["expression"] = basis_to_json(model.expression);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(1, '\t') << '\n';
    if (!out) throw IoError("short write to '" + path + "'");
}

MorphableModel load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed model JSON '" + path + "': " + e.what());
    }
    if (j.value("format", "") != "facejitter-model") {
        throw IoError("'" + path + "' is not a model JSON export");
    }
    MorphableModel model;
    model.topology.vertex_count = j.at("topology").at("vertex_count").get<int>();
    for (const auto& tri : j.at("topology").at("triangles")) {
        model.topology.triangles.push_back({tri.at(0).get<int>(), tri.at(1).get<int>(), tri.at(2).get<int>()});
    }
    for (const auto& lm : j.at("topology").at("landmarks")) {
        model.topology.landmarks.push_back({lm.at("vertex").get<int>(), lm.at("contour").get<bool>()});
    }
    model.topology.symmetry = j.at("topology").at("symmetry").get<std::vector<int>>();
    model.topology.contour_band = j.at("topology").at("contour_band").get<std::vector<int>>();
    model.mean = matrix_from_json(j.at("mean"));
    model.subject = basis_from_json(j.at("subject"));
    model.expression = basis_from_json(j.at("expression"));
    model.topology.validate();
    return model;
}

} // namespace facejitter
