/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/augment.cpp
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
#include "facejitter/augment/augment.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "facejitter/core/errors.hpp"

namespace facejitter {
namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("short write to " + path);
}

bool path_safe_id(const std::string& id) {
    if (id.empty() || id == ".") return false;
    if (id.find('/') != std::string::npos) return false;
    if (id.find('\\') != std::string::npos) return false;
    if (id.find("..") != std::string::npos) return false;
    return true;
}

/// One JSON object per non-blank line; the context string prefixes errors.
std::vector<json> parse_jsonl(const std::string& text, const std::string& context) {
    std::vector<json> objects;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(context + " line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object())
            throw IoError(context + " line " + std::to_string(line_no) + ": expected an object");
        objects.push_back(std::move(j));
    }
    return objects;
}

void check_schema(const json& j, const std::string& context) {
    if (j.value("schema", -1) != kSchemaVersion)
        throw IoError(context + ": missing or unsupported schema version");
}

std::string variant_file_name(const std::string& record_id, const std::string& variant_name) {
    std::string tail = variant_name;
    std::replace(tail.begin(), tail.end(), ':', '-');
    return record_id + "." + tail + ".png";
}

} // namespace

void DatasetManifest::validate() const {
    std::set<std::string> ids;
    for (const auto& record : records) {
        if (!path_safe_id(record.id))
            throw std::invalid_argument("manifest: record id must be a plain file-name token: '" +
                                        record.id + "'");
        if (!ids.insert(record.id).second)
            throw std::invalid_argument("manifest: duplicate record id '" + record.id + "'");
        if (record.image_path.empty())
            throw std::invalid_argument("manifest: empty image path for '" + record.id + "'");
        if (!record.failed && record.landmark_path.empty() && record.fit_path.empty())
            throw std::invalid_argument("manifest: record '" + record.id +
                                        "' needs a landmark or fit path");
    }
}

std::string manifest_to_jsonl(const DatasetManifest& manifest) {
    std::string out;
    for (const auto& record : manifest.records) {
        json j{{"schema", kSchemaVersion},
               {"id", record.id},
               {"subject", record.subject},
               {"image", record.image_path},
               {"landmarks", record.landmark_path},
               {"fit", record.fit_path},
               {"failed", record.failed}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

DatasetManifest manifest_from_jsonl(const std::string& text) {
    DatasetManifest manifest;
    for (const auto& j : parse_jsonl(text, "manifest")) {
        check_schema(j, "manifest");
        ManifestRecord record;
        record.id = j.at("id").get<std::string>();
        record.subject = j.value("subject", "");
        record.image_path = j.at("image").get<std::string>();
        record.landmark_path = j.value("landmarks", "");
        record.fit_path = j.value("fit", "");
        record.failed = j.value("failed", false);
        manifest.records.push_back(std::move(record));
    }
    manifest.validate();
    return manifest;
}

void JitterPolicy::validate() const {
    if (yaw_range < 0 || pitch_range < 0 || roll_range < 0)
        throw std::invalid_argument("jitter policy: angle ranges must be non-negative");
    if (directional_min < 0 || directional_max < directional_min)
        throw std::invalid_argument("jitter policy: directional weight range invalid");
    if (ambient_u_max < 0)
        throw std::invalid_argument("jitter policy: ambient_u_max must be non-negative");
    if (n_pose < 0 || n_light < 0)
        throw std::invalid_argument("jitter policy: variant counts must be non-negative");
}

std::string policy_to_json(const JitterPolicy& policy) {
    json j{{"yaw_range", policy.yaw_range},
           {"pitch_range", policy.pitch_range},
           {"roll_range", policy.roll_range},
           {"directional_min", policy.directional_min},
           {"directional_max", policy.directional_max},
           {"ambient_u_max", policy.ambient_u_max},
           {"n_pose", policy.n_pose},
           {"n_light", policy.n_light}};
    return j.dump(2);
}

JitterPolicy policy_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("jitter policy: ") + e.what());
    }
    if (!j.is_object()) throw IoError("jitter policy: expected an object");
    static const std::set<std::string> known{"yaw_range",       "pitch_range",
                                            "roll_range",      "directional_min",
                                            "directional_max", "ambient_u_max",
                                            "n_pose",          "n_light"};
    for (const auto& item : j.items())
        if (known.find(item.key()) == known.end())
            throw IoError("jitter policy: unknown key '" + item.key() + "'");
    JitterPolicy policy;
    policy.yaw_range = j.value("yaw_range", policy.yaw_range);
    policy.pitch_range = j.value("pitch_range", policy.pitch_range);
    policy.roll_range = j.value("roll_range", policy.roll_range);
    policy.directional_min = j.value("directional_min", policy.directional_min);
    policy.directional_max = j.value("directional_max", policy.directional_max);
    policy.ambient_u_max = j.value("ambient_u_max", policy.ambient_u_max);
    policy.n_pose = j.value("n_pose", policy.n_pose);
    policy.n_light = j.value("n_light", policy.n_light);
    policy.validate();
    return policy;
}

PoseSpec sample_pose_jitter(Rng& rng, const JitterPolicy& policy,
                            const OrthographicCamera& source, int width, int height) {
    policy.validate();
    // Fixed draw order: yaw, pitch, roll.
    const double dyaw = rng.uniform(-policy.yaw_range, policy.yaw_range);
    const double dpitch = rng.uniform(-policy.pitch_range, policy.pitch_range);
    const double droll = rng.uniform(-policy.roll_range, policy.roll_range);
    PoseSpec pose;
    pose.yaw = source.yaw + dyaw;
    pose.pitch = source.pitch + dpitch;
    pose.roll = source.roll + droll;
    pose.width = width;
    pose.height = height;
    return pose;
}

LightingSpec sample_lighting_jitter(Rng& rng, const JitterPolicy& policy) {
    policy.validate();
    // Direction first: uniform over the camera-facing hemisphere by rejection
    // sampling inside the unit ball, discarding z >= 0.
    Vec3 direction;
    for (;;) {
        const double x = rng.uniform(-1.0, 1.0);
        const double y = rng.uniform(-1.0, 1.0);
        const double z = rng.uniform(-1.0, 1.0);
        const double r2 = x * x + y * y + z * z;
        if (r2 > 1.0 || r2 < 1e-12) continue;
        if (z >= 0.0) continue;
        direction = Vec3(x, y, z) / std::sqrt(r2);
        break;
    }
    LightingSpec light;
    light.direction = direction;
    light.directional = rng.uniform(policy.directional_min, policy.directional_max);
    const double u = rng.uniform(0.0, policy.ambient_u_max);
    light.ambient = 1.0 - light.directional * u;
    return light;
}

JitterOutput generate_jitters(const Image8& source, const MorphableModel& model,
                              const FitResult& fit, int image_index,
                              const std::string& record_id, const JitterPolicy& policy,
                              std::uint64_t global_seed) {
    policy.validate();
    JitterOutput output;
    if (image_index < 0 || image_index >= fit.image_count() ||
        !fit.used[static_cast<std::size_t>(image_index)] ||
        fit.rms_px[static_cast<std::size_t>(image_index)] < 0) {
        output.failed = true;
        output.reason = "no usable fit for this image";
        return output;
    }
    const OrthographicCamera& source_camera = fit.cameras[static_cast<std::size_t>(image_index)];
    for (int k = 0; k < policy.n_pose; ++k) {
        Rng rng(derive_seed(global_seed, record_id, static_cast<std::uint64_t>(k)));
        const PoseSpec pose =
            sample_pose_jitter(rng, policy, source_camera, source.width, source.height);
        Variant variant;
        variant.name = "pose:" + std::to_string(k);
        variant.image = render_pose(source, model, fit, image_index, pose);
        variant.meta = json{{"type", "pose"},
                            {"yaw", pose.yaw},
                            {"pitch", pose.pitch},
                            {"roll", pose.roll},
                            {"width", pose.width},
                            {"height", pose.height}}
                           .dump();
        output.variants.push_back(std::move(variant));
    }
    for (int k = 0; k < policy.n_light; ++k) {
        const std::uint64_t index = static_cast<std::uint64_t>(policy.n_pose + k);
        Rng rng(derive_seed(global_seed, record_id, index));
        const LightingSpec light = sample_lighting_jitter(rng, policy);
        Variant variant;
        variant.name = "light:" + std::to_string(k);
        variant.image = relight(source, model, fit, image_index, light);
        variant.meta = json{{"type", "light"},
                            {"direction", {light.direction.x(), light.direction.y(),
                                           light.direction.z()}},
                            {"ambient", light.ambient},
                            {"directional", light.directional}}
                           .dump();
        output.variants.push_back(std::move(variant));
    }
    return output;
}

const OutputRecord* OutputManifest::find(const std::string& id) const {
    for (const auto& record : records)
        if (record.id == id) return &record;
    return nullptr;
}

std::string output_manifest_to_jsonl(const OutputManifest& manifest) {
    std::string out;
    for (const auto& record : manifest.records) {
        json j{{"schema", kSchemaVersion},
               {"id", record.id},
               {"subject", record.subject},
               {"image", record.image_path},
               {"variants", record.variants},
               {"variant_paths", record.variant_paths},
               {"failed", record.failed},
               {"reason", record.reason}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

OutputManifest output_manifest_from_jsonl(const std::string& text) {
    OutputManifest manifest;
    for (const auto& j : parse_jsonl(text, "output manifest")) {
        check_schema(j, "output manifest");
        OutputRecord record;
        record.id = j.at("id").get<std::string>();
        record.subject = j.value("subject", "");
        record.image_path = j.at("image").get<std::string>();
        record.variants = j.value("variants", std::vector<std::string>{});
        record.variant_paths = j.value("variant_paths", std::vector<std::string>{});
        record.failed = j.value("failed", false);
        record.reason = j.value("reason", "");
        if (record.variants.size() != record.variant_paths.size())
            throw IoError("output manifest: variants/variant_paths mismatch for '" + record.id +
                          "'");
        manifest.records.push_back(std::move(record));
    }
    return manifest;
}

TrainingSchedule build_training_schedule(const OutputManifest& manifest,
                                         ScheduleStrategy strategy, double p, int epochs,
                                         std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("schedule: P must lie in [0, 1]");
    if (epochs < 1) throw std::invalid_argument("schedule: epochs must be >= 1");

    TrainingSchedule schedule;
    schedule.strategy = strategy;
    schedule.p = p;
    schedule.epochs = epochs;
    schedule.seed = seed;

    const std::size_t n = manifest.records.size();
    Rng rng(seed);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        if (strategy == ScheduleStrategy::random_p) {
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            rng.shuffle(order);
            for (std::size_t i : order) {
                const OutputRecord& record = manifest.records[i];
                ScheduleEntry entry;
                entry.epoch = epoch;
                entry.record_id = record.id;
                entry.variant = "original";
                // The replacement draw happens for every record so the stream
                // of random numbers does not depend on failure flags.
                const double draw = rng.uniform01();
                if (draw < p && !record.failed && !record.variants.empty()) {
                    const std::uint64_t v = rng.uniform_index(record.variants.size());
                    entry.variant = record.variants[static_cast<std::size_t>(v)];
                }
                schedule.entries.push_back(std::move(entry));
            }
        } else {
            std::vector<ScheduleEntry> pool;
            pool.reserve(2 * n);
            for (const OutputRecord& record : manifest.records) {
                ScheduleEntry original;
                original.epoch = epoch;
                original.record_id = record.id;
                original.variant = "original";
                ScheduleEntry jittered = original;
                if (!record.failed && !record.variants.empty()) {
                    const std::uint64_t v = rng.uniform_index(record.variants.size());
                    jittered.variant = record.variants[static_cast<std::size_t>(v)];
                }
                pool.push_back(std::move(original));
                pool.push_back(std::move(jittered));
            }
            rng.shuffle(pool);
            for (auto& entry : pool) schedule.entries.push_back(std::move(entry));
        }
    }
    return schedule;
}

std::string schedule_to_jsonl(const TrainingSchedule& schedule) {
    json header{{"schema", kSchemaVersion},
                {"strategy", schedule.strategy == ScheduleStrategy::random_p ? "random" : "dual"},
                {"p", schedule.p},
                {"epochs", schedule.epochs},
                {"seed", schedule.seed}};
    std::string out = header.dump();
    out += '\n';
    int epoch = -1;
    int position = 0;
    for (const auto& entry : schedule.entries) {
        if (entry.epoch != epoch) {
            epoch = entry.epoch;
            position = 0;
        }
        json j{{"epoch", entry.epoch},
               {"position", position++},
               {"record", entry.record_id},
               {"variant", entry.variant}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

TrainingSchedule schedule_from_jsonl(const std::string& text) {
    const std::vector<json> lines = parse_jsonl(text, "schedule");
    if (lines.empty()) throw IoError("schedule: missing header line");
    const json& header = lines.front();
    check_schema(header, "schedule");
    TrainingSchedule schedule;
    const std::string strategy = header.value("strategy", "");
    if (strategy == "random")
        schedule.strategy = ScheduleStrategy::random_p;
    else if (strategy == "dual")
        schedule.strategy = ScheduleStrategy::dual;
    else
        throw IoError("schedule: unknown strategy '" + strategy + "'");
    schedule.p = header.value("p", 0.0);
    schedule.epochs = header.value("epochs", 1);
    schedule.seed = header.value("seed", std::uint64_t{0});

    struct Keyed {
        int epoch;
        int position;
        ScheduleEntry entry;
    };
    std::vector<Keyed> keyed;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const json& j = lines[i];
        Keyed k;
        k.epoch = j.at("epoch").get<int>();
        k.position = j.at("position").get<int>();
        k.entry.epoch = k.epoch;
        k.entry.record_id = j.at("record").get<std::string>();
        k.entry.variant = j.at("variant").get<std::string>();
        keyed.push_back(std::move(k));
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        return a.epoch != b.epoch ? a.epoch < b.epoch : a.position < b.position;
    });
    for (auto& k : keyed) schedule.entries.push_back(std::move(k.entry));
    return schedule;
}

namespace {

/// Loads (or computes) the fit for one record and renders its variants.
/// Everything thrown inside becomes a failure entry for just this record.
OutputRecord process_record(const ManifestRecord& record, const MorphableModel& model,
                            const JitterPolicy& policy, std::uint64_t seed,
                            const std::filesystem::path& output_dir,
                            const std::string& provenance) {
    OutputRecord out;
    out.id = record.id;
    out.subject = record.subject;
    out.image_path = record.image_path;
    if (record.failed) {
        out.failed = true;
        out.reason = "flagged failed in the input manifest";
        return out;
    }
    try {
        const Image8 source = read_png(record.image_path);

        FitResult fitted;
        if (!record.fit_path.empty()) {
            fitted = fit_result_from_json(read_text_file(record.fit_path));
        } else {
            std::vector<LandmarkSet> sets = landmarks_from_json(read_text_file(record.landmark_path));
            if (sets.empty()) throw IoError("landmark file holds no sets: " + record.landmark_path);
            fitted = fit(model, sets);
        }
        int image_index = fitted.index_of(record.id);
        if (image_index < 0 && fitted.image_count() == 1) image_index = 0;
        if (image_index < 0)
            throw IoError("fit does not cover record '" + record.id + "'");

        JitterOutput jitters =
            generate_jitters(source, model, fitted, image_index, record.id, policy, seed);
        if (jitters.failed) {
            out.failed = true;
            out.reason = jitters.reason;
            return out;
        }

        json meta_variants = json::array();
        for (const Variant& variant : jitters.variants) {
            const std::string file = variant_file_name(record.id, variant.name);
            write_png((output_dir / file).string(), variant.image);
            out.variants.push_back(variant.name);
            out.variant_paths.push_back(file);
            meta_variants.push_back(json{{"name", variant.name},
                                         {"file", file},
                                         {"spec", json::parse(variant.meta)}});
        }
        json meta{{"schema", kSchemaVersion},
                  {"id", record.id},
                  {"seed", seed},
                  {"provenance", provenance},
                  {"policy", json::parse(policy_to_json(policy))},
                  {"variants", meta_variants}};
        write_text_file((output_dir / (record.id + ".meta.json")).string(), meta.dump(2) + "\n");
    } catch (const std::exception& e) {
        out.failed = true;
        out.reason = e.what();
        out.variants.clear();
        out.variant_paths.clear();
    }
    return out;
}

} // namespace

OutputManifest augment_batch(const DatasetManifest& manifest, const MorphableModel& model,
                             const JitterPolicy& policy, std::uint64_t seed, int workers,
                             const std::string& output_dir, const std::string& provenance) {
    manifest.validate();
    policy.validate();
    const std::filesystem::path out_path(output_dir);
    std::filesystem::create_directories(out_path);

    const std::size_t n = manifest.records.size();
    std::vector<OutputRecord> results(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            results[i] =
                process_record(manifest.records[i], model, policy, seed, out_path, provenance);
        }
    };

    const int thread_count =
        std::max(1, std::min(workers, static_cast<int>(n == 0 ? 1 : n)));
    if (thread_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(thread_count));
        for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
        for (auto& thread : pool) thread.join();
    }

    OutputManifest output;
    output.records = std::move(results);
    std::sort(output.records.begin(), output.records.end(),
              [](const OutputRecord& a, const OutputRecord& b) { return a.id < b.id; });
    write_text_file((out_path / "manifest.jsonl").string(), output_manifest_to_jsonl(output));
    return output;
}

} // namespace facejitter
