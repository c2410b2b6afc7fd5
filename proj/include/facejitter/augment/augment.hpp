/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/augment/augment.hpp
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
#include <numbers>
#include <string>
#include <vector>

#include "facejitter/core/rng.hpp"
#include "facejitter/relight/relight.hpp"
#include "facejitter/render/pose_render.hpp"

namespace facejitter {

/// One input record: an image with its landmarks and, optionally, a
/// precomputed fit. A set failure flag means the record only ever appears
/// as its original image.
struct ManifestRecord {
    std::string id;
    std::string subject;
    std::string image_path;
    std::string landmark_path;
    std::string fit_path; ///< empty: fit on demand
    bool failed = false;
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;

    /// Unique, path-safe record ids; non-empty paths. Throws
    /// std::invalid_argument.
    void validate() const;
};

/// JSON-lines round trip, one record per line, schema field per line.
std::string manifest_to_jsonl(const DatasetManifest& manifest);
DatasetManifest manifest_from_jsonl(const std::string& text);

/// Sampling ranges for the pose and lighting jitters. Pose angles are
/// symmetric deltas around the fitted source pose; lighting draws the
/// directional weight first, then derives the ambient weight as
/// w_a = 1 - w_d * u with u uniform in [0, ambient_u_max].
struct JitterPolicy {
    double yaw_range = 45.0 * std::numbers::pi / 180.0;
    double pitch_range = 15.0 * std::numbers::pi / 180.0;
    double roll_range = 15.0 * std::numbers::pi / 180.0;
    double directional_min = 0.2;
    double directional_max = 1.0;
    double ambient_u_max = 0.5;
    int n_pose = 5;
    int n_light = 5;

    void validate() const; ///< non-negative ranges, counts >= 0
};

/// Policy round trip; parsing rejects unknown keys and validates.
std::string policy_to_json(const JitterPolicy& policy);
JitterPolicy policy_from_json(const std::string& json_text);

/// Uniform pose deltas added to the source pose; output keeps the source
/// dimensions and camera scale/offset. Deterministic given the rng state.
PoseSpec sample_pose_jitter(Rng& rng, const JitterPolicy& policy,
                            const OrthographicCamera& source, int width, int height);

/// Direction uniform over the camera-facing (z < 0) hemisphere by rejection
/// sampling inside the unit ball; weights per policy.
LightingSpec sample_lighting_jitter(Rng& rng, const JitterPolicy& policy);

/// One rendered jitter. `name` is "pose:<k>" or "light:<k>"; `meta` holds the
/// sampled spec as a JSON object string.
struct Variant {
    std::string name;
    Image8 image;
    std::string meta;
};

struct JitterOutput {
    std::vector<Variant> variants;
    bool failed = false;
    std::string reason;
};

/// Renders the policy's pose and lighting variants for one fitted image.
/// Variant k of a record draws from an rng seeded by (global seed, record
/// id, k), so any single variant is reproducible in isolation. A fit whose
/// image never solved yields an empty failed output (original-image
/// fallback) rather than an error.
JitterOutput generate_jitters(const Image8& source, const MorphableModel& model,
                              const FitResult& fit, int image_index,
                              const std::string& record_id, const JitterPolicy& policy,
                              std::uint64_t global_seed);

/// A processed record in the output manifest: the variant names/paths that
/// exist on disk, or a failure reason.
struct OutputRecord {
    std::string id;
    std::string subject;
    std::string image_path; ///< the original
    std::vector<std::string> variants;
    std::vector<std::string> variant_paths;
    bool failed = false;
    std::string reason;
};

struct OutputManifest {
    std::vector<OutputRecord> records; ///< sorted by record id

    const OutputRecord* find(const std::string& id) const;
};

std::string output_manifest_to_jsonl(const OutputManifest& manifest);
OutputManifest output_manifest_from_jsonl(const std::string& text);

enum class ScheduleStrategy { random_p, dual };

struct ScheduleEntry {
    int epoch = 0;
    std::string record_id;
    std::string variant; ///< "original", "pose:<k>" or "light:<k>"
};

struct TrainingSchedule {
    ScheduleStrategy strategy = ScheduleStrategy::random_p;
    double p = 0.0;
    int epochs = 1;
    std::uint64_t seed = 0;
    std::vector<ScheduleEntry> entries; ///< position = order within the epoch
};

/// Epoch-wise training order. Every epoch shuffles the records; random_p
/// independently replaces each non-failed record by a uniformly chosen
/// variant with probability P (re-sampled per epoch); dual emits an original
/// and a jittered entry per record, shuffled independently. Failed or
/// variant-less records always stay original. Throws std::invalid_argument
/// on P outside [0, 1] or epochs < 1.
TrainingSchedule build_training_schedule(const OutputManifest& manifest,
                                         ScheduleStrategy strategy, double p, int epochs,
                                         std::uint64_t seed);

/// JSON-lines: one {"epoch", "position", "record", "variant"} per line after
/// a header line carrying the strategy parameters.
std::string schedule_to_jsonl(const TrainingSchedule& schedule);
TrainingSchedule schedule_from_jsonl(const std::string& text);

/// Fits (where needed) and renders jitters for every record over a worker
/// pool, writing variant images and per-record metadata under `output_dir`.
/// Output is byte-identical for any worker count. Unreadable or failing
/// records become failure entries; the batch continues. `provenance` is
/// stamped into every metadata file (seed, config hash, tool version).
OutputManifest augment_batch(const DatasetManifest& manifest, const MorphableModel& model,
                             const JitterPolicy& policy, std::uint64_t seed, int workers,
                             const std::string& output_dir, const std::string& provenance = "");

} // namespace facejitter
