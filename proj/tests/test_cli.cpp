/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: tests/test_cli.cpp
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
#include <doctest.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "facejitter/augment/augment.hpp"
#include "facejitter/cli/cli.hpp"
#include "facejitter/core/errors.hpp"
#include "facejitter/core/image.hpp"
#include "facejitter/fitting/fitting.hpp"
#include "facejitter/morphablemodel/synthetic.hpp"
#include "facejitter/render/pose_render.hpp"

#include "test_util.hpp"

using namespace facejitter;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

int run(std::initializer_list<std::string> args) {
    return run_cli(std::vector<std::string>(args));
}

std::string hex16(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf);
}

bool is_hex16(const std::string& text) {
    if (text.size() != 16) return false;
    for (const char c : text)
        if (std::isxdigit(static_cast<unsigned char>(c)) == 0) return false;
    return true;
}

nlohmann::json read_json(const std::string& path) {
    return nlohmann::json::parse(fjtest::read_file(path));
}

/// Checks the sidecar invariant: config_hash is the FNV-1a hash of the body
/// serialized without the hash field itself.
void check_meta(const std::string& output_path, const std::string& subcommand) {
    const std::string meta_path = output_path + ".meta.json";
    REQUIRE(std::filesystem::exists(meta_path));
    nlohmann::json meta = read_json(meta_path);
    CHECK(meta.at("schema").get<int>() == 1);
    CHECK(meta.at("subcommand").get<std::string>() == subcommand);
    const std::string stored = meta.at("config_hash").get<std::string>();
    CHECK(is_hex16(stored));
    meta.erase("config_hash");
    CHECK(stored == hex16(fnv1a64(meta.dump())));
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("run config parsing is strict and round trips") {
    const RunConfig defaults = run_config_from_json("{}");
    CHECK(defaults.seed == 0);
    CHECK(defaults.workers == 0);
    CHECK(defaults.verbosity == 1);
    CHECK(defaults.fit.max_iterations == FitConfig{}.max_iterations);
    CHECK(defaults.policy.n_pose == JitterPolicy{}.n_pose);

    CHECK_THROWS_AS(run_config_from_json("not json"), IoError);
    CHECK_THROWS_AS(run_config_from_json("[1, 2]"), IoError);
    CHECK_THROWS_AS(run_config_from_json(R"({"sede": 1})"), IoError);
    CHECK_THROWS_AS(run_config_from_json(R"({"fit": {"tolerance": 0.1}})"), IoError);
    CHECK_THROWS_AS(run_config_from_json(R"({"fit": 3})"), IoError);
    CHECK_THROWS_AS(run_config_from_json(R"({"policy": {"n_poses": 2}})"), IoError);
    CHECK_THROWS_AS(run_config_from_json(R"({"workers": -2})"), IoError);

    RunConfig config;
    config.seed = 42;
    config.workers = 3;
    config.verbosity = 2;
    config.fit.max_iterations = 7;
    config.fit.tol_px = 0.25;
    config.fit.clamp_sigmas = 2.5;
    config.fit.lambda = 0.5;
    config.policy.yaw_range = 0.3;
    config.policy.n_pose = 2;
    config.policy.n_light = 1;
    const RunConfig back = run_config_from_json(run_config_to_json(config));
    CHECK(back.seed == 42);
    CHECK(back.workers == 3);
    CHECK(back.verbosity == 2);
    CHECK(back.fit.max_iterations == 7);
    CHECK(back.fit.tol_px == 0.25);
    CHECK(back.fit.clamp_sigmas == 2.5);
    CHECK(back.fit.lambda == 0.5);
    CHECK(back.policy.yaw_range == 0.3);
    CHECK(back.policy.n_pose == 2);
    CHECK(back.policy.n_light == 1);
}

TEST_CASE("fnv1a64 matches the reference vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
    CHECK(fnv1a64("config-a") != fnv1a64("config-b"));
}

TEST_CASE("help succeeds and usage errors exit with one") {
    CHECK(run({"--help"}) == 0);
    CHECK(run({}) == 1);
    CHECK(run({"frobnicate"}) == 1);
    CHECK(run({"fit"}) == 1);
    CHECK(run({"fit", "--model", "nowhere.bin", "--landmarks", "nowhere.json",
               "--out", "out.json"}) == 1);
    CHECK(run({"schedule", "--manifest", "x", "--strategy", "sideways", "--out", "y"}) == 1);
    CHECK(run({"--config", "no-such-config.json", "synth-model", "--out", "m.bin"}) == 1);
}

TEST_CASE("synth-model writes loadable models with sidecars") {
    const fjtest::TempDir dir("cli-synth");
    const std::string bin_path = dir.file("model.bin");
    CHECK(run({"synth-model", "--out", bin_path, "--seed", "11", "--subjects", "40",
               "--rank-subject", "12", "--rank-expression", "6", "--expressions", "20",
               "--bands", "20", "--segments", "32"}) == 0);
    REQUIRE(std::filesystem::exists(bin_path));
    const MorphableModel loaded = load_model(bin_path);
    const MorphableModel reference = fjtest::small_model();
    CHECK(loaded.vertex_count() == reference.vertex_count());
    CHECK(loaded.subject.count() == 12);
    CHECK(loaded.expression.count() == 6);
    CHECK((loaded.mean - reference.mean).norm() == 0.0);
    CHECK((loaded.subject.directions - reference.subject.directions).norm() == 0.0);
    CHECK((loaded.expression.directions - reference.expression.directions).norm() == 0.0);
    check_meta(bin_path, "synth-model");
    const nlohmann::json meta = read_json(bin_path + ".meta.json");
    CHECK(meta.at("seed").get<std::uint64_t>() == 11);
    CHECK(meta.at("parameters").at("bands").get<int>() == 20);

    const std::string json_path = dir.file("model.json");
    CHECK(run({"synth-model", "--out", json_path, "--seed", "3", "--subjects", "12",
               "--rank-subject", "5", "--rank-expression", "3", "--expressions", "8",
               "--bands", "12", "--segments", "24"}) == 0);
    const MorphableModel via_json = load_model_json(json_path);
    const MorphableModel direct = build_synthetic_model(3, 12, 5, 3, 8, 12, 24);
    CHECK(via_json.vertex_count() == direct.vertex_count());
    CHECK((via_json.mean - direct.mean).norm() == 0.0);
    CHECK((via_json.subject.directions - direct.subject.directions).norm() == 0.0);
}

TEST_CASE("fit then identity render-pose reproduces the source face") {
    const fjtest::TempDir dir("cli-fit-pose");
    const MorphableModel model = fjtest::small_model();
    const std::string model_path = dir.file("model.bin");
    save_model(model_path, model);

    fjtest::CaseSpec spec;
    spec.width = 96;
    spec.height = 96;
    spec.scale_lo = 0.35;
    spec.scale_hi = 0.4;
    fjtest::TruthCase truth = fjtest::make_case(model, 8100, spec);
    truth.landmarks.image_id = "img0";
    const Image8 source =
        fjtest::raycast_textured(truth.vertices, model.topology, truth.camera, 96, 96);
    const std::string source_path = dir.file("img0.png");
    write_png(source_path, source);
    const std::string landmarks_path = dir.file("img0.landmarks.json");
    fjtest::write_text_file(landmarks_path, landmarks_to_json({truth.landmarks}));

    const std::string fit_path = dir.file("fit.json");
    CHECK(run({"fit", "--model", model_path, "--landmarks", landmarks_path,
               "--out", fit_path}) == 0);
    const FitResult fitted = fit_result_from_json(fjtest::read_file(fit_path));
    REQUIRE(fitted.image_count() == 1);
    CHECK(fitted.converged);
    CHECK(fitted.rms_px[0] < 0.5);
    check_meta(fit_path, "fit");
    const nlohmann::json fit_meta = read_json(fit_path + ".meta.json");
    CHECK(fit_meta.at("parameters").at("images").get<int>() == 1);
    CHECK(fit_meta.at("parameters").at("converged").get<bool>());

    const std::string out_path = dir.file("identity.png");
    CHECK(run({"render-pose", "--model", model_path, "--fit", fit_path, "--image",
               source_path, "--image-id", "img0", "--out", out_path}) == 0);
    const Image8 rendered = read_png(out_path);
    REQUIRE(rendered.width == 96);
    REQUIRE(rendered.height == 96);
    check_meta(out_path, "render-pose");

    PoseSpec pose;
    pose.yaw = fitted.cameras[0].yaw;
    pose.pitch = fitted.cameras[0].pitch;
    pose.roll = fitted.cameras[0].roll;
    pose.width = 96;
    pose.height = 96;
    RenderLayers layers;
    const Image8 direct = render_pose(source, model, fitted, 0, pose, &layers);
    CHECK(rendered.data == direct.data);

    int gated = 0;
    for (const float a : layers.feathered_alpha.data)
        if (a > 0.999f) ++gated;
    REQUIRE(gated > 500);
    const double diff = fjtest::mean_abs_diff(rendered, source, [&](int u, int v) {
        return layers.feathered_alpha.at(u, v) > 0.999f;
    });
    REQUIRE(diff >= 0.0);
    CHECK(diff < 2.0 / 255.0);

    const std::string capped_path = dir.file("fit-capped.json");
    CHECK(run({"fit", "--model", model_path, "--landmarks", landmarks_path, "--out",
               capped_path, "--max-iterations", "2", "--tol-px", "1e-12"}) == 0);
    const nlohmann::json capped_meta = read_json(capped_path + ".meta.json");
    CHECK(capped_meta.at("parameters").at("iterations").get<int>() <= 2);

    fjtest::write_text_file(dir.file("empty.json"), "[]");
    CHECK(run({"fit", "--model", model_path, "--landmarks", dir.file("empty.json"),
               "--out", dir.file("none.json")}) == 1);
}

TEST_CASE("relight command keeps ambient light and writes the modulation map") {
    const fjtest::TempDir dir("cli-relight");
    const MorphableModel model = fjtest::small_model();
    const std::string model_path = dir.file("model.bin");
    save_model(model_path, model);

    fjtest::CaseSpec spec;
    spec.width = 96;
    spec.height = 96;
    spec.scale_lo = 0.35;
    spec.scale_hi = 0.4;
    fjtest::TruthCase truth = fjtest::make_case(model, 8200, spec);
    truth.landmarks.image_id = "img0";
    const Image8 source =
        fjtest::raycast_textured(truth.vertices, model.topology, truth.camera, 96, 96);
    const std::string source_path = dir.file("img0.png");
    write_png(source_path, source);
    const std::string fit_path = dir.file("fit.json");
    fjtest::write_text_file(fit_path, fit_result_to_json(fit(model, {truth.landmarks})));

    const std::string ambient_path = dir.file("ambient.png");
    const std::string map_path = dir.file("ambient.modulation.f32");
    CHECK(run({"relight", "--model", model_path, "--fit", fit_path, "--image", source_path,
               "--out", ambient_path, "--ambient", "1", "--directional", "0",
               "--modulation-out", map_path}) == 0);
    CHECK(fjtest::read_file(ambient_path) == fjtest::read_file(source_path));
    const ImageF modulation = read_float_map(map_path);
    REQUIRE(modulation.width == 96);
    REQUIRE(modulation.height == 96);
    for (const float value : modulation.data) REQUIRE(value == 1.0f);
    check_meta(ambient_path, "relight");

    const std::string lit_path = dir.file("lit.png");
    CHECK(run({"relight", "--model", model_path, "--fit", fit_path, "--image", source_path,
               "--out", lit_path, "--ambient", "0.3", "--directional", "0.7",
               "--direction", "0.3,0,-2"}) == 0);
    CHECK(fjtest::read_file(lit_path) != fjtest::read_file(source_path));
    const nlohmann::json meta = read_json(lit_path + ".meta.json");
    const auto direction = meta.at("parameters").at("direction");
    REQUIRE(direction.size() == 3);
    const double norm = std::sqrt(direction[0].get<double>() * direction[0].get<double>() +
                                  direction[1].get<double>() * direction[1].get<double>() +
                                  direction[2].get<double>() * direction[2].get<double>());
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(direction[2].get<double>() < 0.0);

    CHECK(run({"relight", "--model", model_path, "--fit", fit_path, "--image", source_path,
               "--out", dir.file("bad.png"), "--direction", "0,0,0"}) == 1);
}

TEST_CASE("jitter schedule and preview compose into a deterministic pipeline") {
    const fjtest::TempDir dir("cli-pipeline");
    const MorphableModel model = fjtest::small_model();
    const std::string model_path = dir.file("model.bin");
    save_model(model_path, model);
    const DatasetManifest manifest = fjtest::write_dataset(dir, model, 3, 4200);
    const std::string manifest_path = dir.file("manifest.jsonl");
    fjtest::write_text_file(manifest_path, manifest_to_jsonl(manifest));

    const std::string run_a = dir.file("runA");
    const std::string run_b = dir.file("runB");
    const std::vector<std::string> common{
        "--manifest", manifest_path, "--model", model_path, "--seed", "77",
        "--n-pose", "2",  "--n-light", "1",   "--yaw-range", "20",
        "--pitch-range", "8", "--roll-range", "8"};
    std::vector<std::string> args_a{"jitter", "--out-dir", run_a, "--workers", "1"};
    args_a.insert(args_a.end(), common.begin(), common.end());
    std::vector<std::string> args_b{"jitter", "--out-dir", run_b, "--workers", "2"};
    args_b.insert(args_b.end(), common.begin(), common.end());
    CHECK(run_cli(args_a) == 0);
    CHECK(run_cli(args_b) == 0);

    const OutputManifest output =
        output_manifest_from_jsonl(fjtest::read_file(run_a + "/manifest.jsonl"));
    REQUIRE(output.records.size() == 3);
    for (const auto& record : output.records) {
        CHECK_FALSE(record.failed);
        REQUIRE(record.variants.size() == 3);
        for (const auto& variant_path : record.variant_paths) {
            CHECK(std::filesystem::exists(run_a + "/" + variant_path));
            CHECK(fjtest::read_file(run_a + "/" + variant_path) ==
                  fjtest::read_file(run_b + "/" + variant_path));
        }
        CHECK(fjtest::read_file(run_a + "/" + record.id + ".meta.json") ==
              fjtest::read_file(run_b + "/" + record.id + ".meta.json"));
        const nlohmann::json meta = read_json(run_a + "/" + record.id + ".meta.json");
        const std::string provenance = meta.at("provenance").get<std::string>();
        CHECK(provenance.rfind("facejitter jitter seed=77 config=", 0) == 0);
        CHECK(is_hex16(provenance.substr(provenance.size() - 16)));
        CHECK(meta.at("policy").at("yaw_range").get<double>() ==
              doctest::Approx(20.0 * kDeg).epsilon(1e-12));
    }
    CHECK(fjtest::read_file(run_a + "/manifest.jsonl") ==
          fjtest::read_file(run_b + "/manifest.jsonl"));
    CHECK(fjtest::read_file(run_a + "/batch.meta.json") ==
          fjtest::read_file(run_b + "/batch.meta.json"));

    const std::string dual_path = dir.file("dual.jsonl");
    CHECK(run({"schedule", "--manifest", run_a + "/manifest.jsonl", "--strategy", "dual",
               "--out", dual_path, "--seed", "5"}) == 0);
    const TrainingSchedule dual = schedule_from_jsonl(fjtest::read_file(dual_path));
    CHECK(dual.strategy == ScheduleStrategy::dual);
    CHECK(dual.entries.size() == 6);
    check_meta(dual_path, "schedule");

    const std::string random_path = dir.file("random.jsonl");
    CHECK(run({"schedule", "--manifest", run_a + "/manifest.jsonl", "--strategy", "random",
               "--p", "0.5", "--epochs", "2", "--out", random_path, "--seed", "5"}) == 0);
    const TrainingSchedule random = schedule_from_jsonl(fjtest::read_file(random_path));
    CHECK(random.strategy == ScheduleStrategy::random_p);
    CHECK(random.p == 0.5);
    CHECK(random.entries.size() == 6);

    const std::string montage_path = dir.file("preview.png");
    CHECK(run({"preview", "--manifest", run_a + "/manifest.jsonl", "--out",
               montage_path}) == 0);
    const Image8 montage = read_png(montage_path);
    CHECK(montage.width == 2 * (96 + 2) + 2);
    CHECK(montage.height == 2 * (96 + 2) + 2);
    CHECK(montage.channels == 3);
    CHECK(run({"preview", "--manifest", run_a + "/manifest.jsonl", "--record", "rec1",
               "--out", dir.file("preview1.png")}) == 0);
    CHECK(run({"preview", "--manifest", run_a + "/manifest.jsonl", "--record", "nope",
               "--out", dir.file("preview2.png")}) == 1);
}

TEST_CASE("jitter exit code separates total failure from partial failure") {
    const fjtest::TempDir dir("cli-jitter-fail");
    const MorphableModel model = fjtest::small_model();
    const std::string model_path = dir.file("model.bin");
    save_model(model_path, model);

    DatasetManifest broken = fjtest::write_dataset(dir, model, 2, 4300);
    fjtest::write_text_file(broken.records[0].landmark_path, "garbage");
    fjtest::write_text_file(broken.records[1].landmark_path, "garbage");
    const std::string broken_path = dir.file("broken.jsonl");
    fjtest::write_text_file(broken_path, manifest_to_jsonl(broken));
    CHECK(run({"jitter", "--manifest", broken_path, "--model", model_path, "--out-dir",
               dir.file("all-failed"), "--n-pose", "1", "--n-light", "0",
               "--workers", "1"}) == 2);
    const OutputManifest all_failed =
        output_manifest_from_jsonl(fjtest::read_file(dir.file("all-failed/manifest.jsonl")));
    REQUIRE(all_failed.records.size() == 2);
    CHECK(all_failed.records[0].failed);
    CHECK(all_failed.records[1].failed);
    CHECK(run({"preview", "--manifest", dir.file("all-failed/manifest.jsonl"), "--out",
               dir.file("no-preview.png")}) == 1);

    DatasetManifest half = fjtest::write_dataset(dir, model, 2, 4400);
    fjtest::write_text_file(half.records[0].landmark_path, "garbage");
    const std::string half_path = dir.file("half.jsonl");
    fjtest::write_text_file(half_path, manifest_to_jsonl(half));
    CHECK(run({"jitter", "--manifest", half_path, "--model", model_path, "--out-dir",
               dir.file("half-failed"), "--n-pose", "1", "--n-light", "0",
               "--workers", "1"}) == 0);

    fjtest::write_text_file(dir.file("empty.jsonl"), "\n");
    CHECK(run({"jitter", "--manifest", dir.file("empty.jsonl"), "--model", model_path,
               "--out-dir", dir.file("empty-out"), "--workers", "1"}) == 0);
}

TEST_CASE("config file values become defaults that flags override") {
    const fjtest::TempDir dir("cli-config");
    const MorphableModel model = fjtest::small_model();
    const std::string model_path = dir.file("model.bin");
    save_model(model_path, model);
    const DatasetManifest manifest = fjtest::write_dataset(dir, model, 1, 4500);
    const std::string manifest_path = dir.file("manifest.jsonl");
    fjtest::write_text_file(manifest_path, manifest_to_jsonl(manifest));

    const std::string config_path = dir.file("config.json");
    fjtest::write_text_file(config_path, R"({
      "seed": 5,
      "workers": 1,
      "policy": {"n_pose": 1, "n_light": 0, "yaw_range": 0.3}
    })");

    const std::string from_config = dir.file("from-config");
    CHECK(run({"--config", config_path, "jitter", "--manifest", manifest_path, "--model",
               model_path, "--out-dir", from_config}) == 0);
    const nlohmann::json meta_config = read_json(from_config + "/rec0.meta.json");
    CHECK(meta_config.at("seed").get<std::uint64_t>() == 5);
    REQUIRE(meta_config.at("variants").size() == 1);
    CHECK(meta_config.at("policy").at("yaw_range").get<double>() == 0.3);

    const std::string from_flags = dir.file("from-flags");
    CHECK(run({"--config", config_path, "jitter", "--manifest", manifest_path, "--model",
               model_path, "--out-dir", from_flags, "--seed", "9",
               "--yaw-range", "10"}) == 0);
    const nlohmann::json meta_flags = read_json(from_flags + "/rec0.meta.json");
    CHECK(meta_flags.at("seed").get<std::uint64_t>() == 9);
    CHECK(meta_flags.at("policy").at("yaw_range").get<double>() ==
          doctest::Approx(10.0 * kDeg).epsilon(1e-12));
    CHECK(fjtest::read_file(from_flags + "/rec0.pose-0.png") !=
          fjtest::read_file(from_config + "/rec0.pose-0.png"));

    fjtest::write_text_file(dir.file("bad.json"), R"({"sede": 5})");
    CHECK(run({"--config", dir.file("bad.json"), "jitter", "--manifest", manifest_path,
               "--model", model_path, "--out-dir", dir.file("bad-out")}) == 1);
}

TEST_CASE("worker count falls back from flag to config to environment") {
    const fjtest::TempDir dir("cli-workers");
    fjtest::write_text_file(dir.file("empty.jsonl"), "\n");
    const MorphableModel tiny = build_synthetic_model(2, 6, 2, 1, 4, 12, 16);
    const std::string model_path = dir.file("model.bin");
    save_model(model_path, tiny);
    const auto workers_of = [&](const std::string& out_dir,
                                std::initializer_list<std::string> extra) {
        std::vector<std::string> args{"jitter", "--manifest", dir.file("empty.jsonl"),
                                      "--model", model_path, "--out-dir", out_dir};
        args.insert(args.end(), extra.begin(), extra.end());
        REQUIRE(run_cli(args) == 0);
        return read_json(out_dir + "/batch.meta.json").at("parameters").at("workers").get<int>();
    };

    ::unsetenv("FACEJITTER_WORKERS");
    CHECK(workers_of(dir.file("w-default"), {}) == 1);
    CHECK(workers_of(dir.file("w-flag"), {"--workers", "3"}) == 3);

    fjtest::write_text_file(dir.file("workers.json"), R"({"workers": 2})");
    CHECK(workers_of(dir.file("w-config"), {"--config", dir.file("workers.json")}) == 2);
    CHECK(workers_of(dir.file("w-both"), {"--config", dir.file("workers.json"),
                                          "--workers", "4"}) == 4);

    ::setenv("FACEJITTER_WORKERS", "5", 1);
    CHECK(workers_of(dir.file("w-env"), {}) == 5);
    CHECK(workers_of(dir.file("w-env-config"),
                     {"--config", dir.file("workers.json")}) == 2);
    ::setenv("FACEJITTER_WORKERS", "abc", 1);
    CHECK(workers_of(dir.file("w-env-bad"), {}) == 1);
    ::unsetenv("FACEJITTER_WORKERS");
}

} // TEST_SUITE
