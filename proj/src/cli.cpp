/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: src/cli.cpp
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
#include "facejitter/cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "facejitter/core/errors.hpp"
#include "facejitter/core/image.hpp"
#include "facejitter/morphablemodel/synthetic.hpp"
#include "facejitter/relight/relight.hpp"
#include "facejitter/render/pose_render.hpp"

namespace facejitter {
namespace {

using nlohmann::json;

constexpr double kDegree = std::numbers::pi / 180.0;

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

bool ends_with(const std::string& text, const std::string& suffix) {
    return text.size() >= suffix.size() &&
           text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0;
}

MorphableModel load_model_any(const std::string& path) {
    return ends_with(path, ".json") ? load_model_json(path) : load_model(path);
}

json fit_config_to_json(const FitConfig& config) {
    return json{{"max_iterations", config.max_iterations},
                {"tol_px", config.tol_px},
                {"clamp_sigmas", config.clamp_sigmas},
                {"lambda", config.lambda}};
}

FitConfig fit_config_from_json(const json& j) {
    if (!j.is_object()) throw IoError("config: 'fit' must be an object");
    static const std::set<std::string> known{"max_iterations", "tol_px", "clamp_sigmas",
                                            "lambda"};
    for (const auto& item : j.items())
        if (known.find(item.key()) == known.end())
            throw IoError("config: unknown fit key '" + item.key() + "'");
    FitConfig config;
    config.max_iterations = j.value("max_iterations", config.max_iterations);
    config.tol_px = j.value("tol_px", config.tol_px);
    config.clamp_sigmas = j.value("clamp_sigmas", config.clamp_sigmas);
    config.lambda = j.value("lambda", config.lambda);
    config.validate();
    return config;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf);
}

/// Sidecar written next to every output file: enough to regenerate it.
void write_meta(const std::string& output_path, const std::string& subcommand,
                const RunConfig& config, const std::vector<std::string>& inputs,
                const json& parameters) {
    json body{{"schema", 1},
              {"tool", "facejitter"},
              {"subcommand", subcommand},
              {"seed", config.seed},
              {"inputs", inputs},
              {"parameters", parameters},
              {"config", json::parse(run_config_to_json(config))}};
    body["config_hash"] = hex64(fnv1a64(body.dump()));
    write_text_file(output_path + ".meta.json", body.dump(2) + "\n");
}

int resolve_workers(int flag_value, const RunConfig& config) {
    if (flag_value > 0) return flag_value;
    if (config.workers > 0) return config.workers;
    if (const char* env = std::getenv("FACEJITTER_WORKERS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && parsed > 0) return static_cast<int>(parsed);
        std::cerr << "warning: ignoring invalid FACEJITTER_WORKERS value '" << env << "'\n";
    }
    return 1;
}

Image8 to_rgb(const Image8& image) {
    if (image.channels == 3) return image;
    Image8 out(image.width, image.height, 3);
    for (int v = 0; v < image.height; ++v) {
        for (int u = 0; u < image.width; ++u) {
            const std::uint8_t* src = image.pixel(u, v);
            std::uint8_t* dst = out.pixel(u, v);
            if (image.channels == 1) {
                dst[0] = dst[1] = dst[2] = src[0];
            } else {
                dst[0] = src[0];
                dst[1] = src[1];
                dst[2] = src[2];
            }
        }
    }
    return out;
}

/// Near-square grid of equally sized cells, gray background, row-major fill.
Image8 montage(const std::vector<Image8>& images) {
    if (images.empty()) throw std::invalid_argument("montage: no images");
    int cell_w = 0;
    int cell_h = 0;
    for (const auto& image : images) {
        cell_w = std::max(cell_w, image.width);
        cell_h = std::max(cell_h, image.height);
    }
    const int n = static_cast<int>(images.size());
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const int rows = (n + cols - 1) / cols;
    const int pad = 2;
    Image8 out(cols * (cell_w + pad) + pad, rows * (cell_h + pad) + pad, 3, 32);
    for (int i = 0; i < n; ++i) {
        const Image8 rgb = to_rgb(images[static_cast<std::size_t>(i)]);
        const int r = i / cols;
        const int c = i % cols;
        const int u0 = pad + c * (cell_w + pad);
        const int v0 = pad + r * (cell_h + pad);
        for (int v = 0; v < rgb.height; ++v) {
            for (int u = 0; u < rgb.width; ++u) {
                std::uint8_t* dst = out.pixel(u0 + u, v0 + v);
                const std::uint8_t* src = rgb.pixel(u, v);
                dst[0] = src[0];
                dst[1] = src[1];
                dst[2] = src[2];
            }
        }
    }
    return out;
}

/// Pre-scan for --config so file values become flag defaults; flags given on
/// the command line then override them naturally.
RunConfig load_config_from_args(const std::vector<std::string>& args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& arg = args[i];
        if (arg == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
        } else if (arg.rfind("--config=", 0) == 0) {
            config_path = arg.substr(9);
        }
    }
    if (config_path.empty()) return RunConfig{};
    return run_config_from_json(read_text_file(config_path));
}

int find_image_index(const FitResult& fit, const std::string& image_id) {
    if (image_id.empty()) {
        if (fit.image_count() == 0) throw IoError("fit holds no images");
        return 0;
    }
    const int index = fit.index_of(image_id);
    if (index < 0) throw IoError("fit does not cover image id '" + image_id + "'");
    return index;
}

} // namespace

RunConfig run_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw IoError("config: expected a JSON object");
    static const std::set<std::string> known{"seed", "workers", "verbosity", "fit", "policy"};
    for (const auto& item : j.items())
        if (known.find(item.key()) == known.end())
            throw IoError("config: unknown key '" + item.key() + "'");
    RunConfig config;
    config.seed = j.value("seed", std::uint64_t{0});
    config.workers = j.value("workers", 0);
    config.verbosity = j.value("verbosity", 1);
    if (j.contains("fit")) config.fit = fit_config_from_json(j["fit"]);
    if (j.contains("policy")) config.policy = policy_from_json(j["policy"].dump());
    if (config.workers < 0) throw IoError("config: workers must be non-negative");
    return config;
}

std::string run_config_to_json(const RunConfig& config) {
    json j{{"seed", config.seed},
           {"workers", config.workers},
           {"verbosity", config.verbosity},
           {"fit", fit_config_to_json(config.fit)},
           {"policy", json::parse(policy_to_json(config.policy))}};
    return j.dump(2);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 14695981039346656037ull;
    for (const char c : text) {
        hash ^= static_cast<std::uint8_t>(c);
        hash *= 1099511628211ull;
    }
    return hash;
}

int run_cli(const std::vector<std::string>& args) {
    RunConfig config;
    try {
        config = load_config_from_args(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    CLI::App app{"semi-synthetic pose and lighting augmentation for face imagery", "facejitter"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (strict keys; flags override)")
        ->expected(1);
    app.add_option("--seed", config.seed, "global random seed");
    int workers_flag = 0;
    app.add_option("--workers", workers_flag, "worker threads (default: FACEJITTER_WORKERS or 1)");
    app.add_option("--verbosity", config.verbosity, "0 quiet, 1 normal, 2 chatty");

    // synth-model
    auto* synth = app.add_subcommand("synth-model", "build a synthetic morphable model");
    std::string synth_out;
    int synth_subjects = 120;
    int synth_expressions = 0;
    int synth_rank_subject = 50;
    int synth_rank_expression = 20;
    int synth_bands = 40;
    int synth_segments = 64;
    synth->add_option("--out", synth_out, "output model path (.json for JSON text)")->required();
    synth->add_option("--subjects", synth_subjects, "population size for the subject basis");
    synth->add_option("--expressions", synth_expressions,
                      "population size for the expression basis (0: subjects/2)");
    synth->add_option("--rank-subject", synth_rank_subject, "subject basis rank");
    synth->add_option("--rank-expression", synth_rank_expression, "expression basis rank");
    synth->add_option("--bands", synth_bands, "head template latitude bands");
    synth->add_option("--segments", synth_segments, "head template segments per band");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "fit shape and cameras to landmark files");
    std::string fit_model_path;
    std::string fit_landmarks_path;
    std::string fit_out;
    fit_cmd->add_option("--model", fit_model_path, "morphable model path")->required();
    fit_cmd->add_option("--landmarks", fit_landmarks_path, "landmark JSON (all images fit jointly)")
        ->required();
    fit_cmd->add_option("--out", fit_out, "output fit JSON path")->required();
    fit_cmd->add_option("--max-iterations", config.fit.max_iterations, "outer iteration cap");
    fit_cmd->add_option("--tol-px", config.fit.tol_px, "RMS convergence tolerance (pixels)");
    fit_cmd->add_option("--clamp-sigmas", config.fit.clamp_sigmas, "coefficient clamp (sigmas)");
    fit_cmd->add_option("--lambda", config.fit.lambda, "Tikhonov row weight");

    // render-pose
    auto* pose_cmd = app.add_subcommand("render-pose", "re-render an image under a new pose");
    std::string pose_model_path;
    std::string pose_fit_path;
    std::string pose_image_path;
    std::string pose_image_id;
    std::string pose_out;
    double pose_yaw = 0.0;
    double pose_pitch = 0.0;
    double pose_roll = 0.0;
    bool pose_absolute = false;
    int pose_width = 0;
    int pose_height = 0;
    pose_cmd->add_option("--model", pose_model_path, "morphable model path")->required();
    pose_cmd->add_option("--fit", pose_fit_path, "fit JSON path")->required();
    pose_cmd->add_option("--image", pose_image_path, "source image (PNG)")->required();
    pose_cmd->add_option("--image-id", pose_image_id, "image id within the fit (default: first)");
    pose_cmd->add_option("--out", pose_out, "output PNG path")->required();
    pose_cmd->add_option("--yaw", pose_yaw, "yaw delta in degrees (absolute with --absolute)");
    pose_cmd->add_option("--pitch", pose_pitch, "pitch delta in degrees");
    pose_cmd->add_option("--roll", pose_roll, "roll delta in degrees");
    pose_cmd->add_flag("--absolute", pose_absolute, "treat angles as absolute target pose");
    pose_cmd->add_option("--width", pose_width, "output width (default: source width)");
    pose_cmd->add_option("--height", pose_height, "output height (default: source height)");

    // relight
    auto* light_cmd = app.add_subcommand("relight", "re-render an image under new lighting");
    std::string light_model_path;
    std::string light_fit_path;
    std::string light_image_path;
    std::string light_image_id;
    std::string light_out;
    std::string light_modulation_out;
    std::vector<double> light_direction{0.0, 0.0, -1.0};
    double light_ambient = 1.0;
    double light_directional = 0.0;
    light_cmd->add_option("--model", light_model_path, "morphable model path")->required();
    light_cmd->add_option("--fit", light_fit_path, "fit JSON path")->required();
    light_cmd->add_option("--image", light_image_path, "source image (PNG)")->required();
    light_cmd->add_option("--image-id", light_image_id, "image id within the fit (default: first)");
    light_cmd->add_option("--out", light_out, "output PNG path")->required();
    light_cmd
        ->add_option("--direction", light_direction,
                     "light propagation direction x,y,z in camera coordinates (normalized)")
        ->delimiter(',')
        ->expected(3);
    light_cmd->add_option("--ambient", light_ambient, "ambient weight");
    light_cmd->add_option("--directional", light_directional, "directional weight");
    light_cmd->add_option("--modulation-out", light_modulation_out,
                          "also write the extended modulation field (float map)");

    // jitter
    auto* jitter_cmd = app.add_subcommand("jitter", "render pose and lighting jitter batches");
    std::string jitter_manifest_path;
    std::string jitter_model_path;
    std::string jitter_out_dir;
    double jitter_yaw_range = config.policy.yaw_range / kDegree;
    double jitter_pitch_range = config.policy.pitch_range / kDegree;
    double jitter_roll_range = config.policy.roll_range / kDegree;
    jitter_cmd->add_option("--manifest", jitter_manifest_path, "input manifest (JSON lines)")
        ->required();
    jitter_cmd->add_option("--model", jitter_model_path, "morphable model path")->required();
    jitter_cmd->add_option("--out-dir", jitter_out_dir, "output directory")->required();
    jitter_cmd->add_option("--yaw-range", jitter_yaw_range, "pose jitter yaw range in degrees");
    jitter_cmd->add_option("--pitch-range", jitter_pitch_range,
                           "pose jitter pitch range in degrees");
    jitter_cmd->add_option("--roll-range", jitter_roll_range, "pose jitter roll range in degrees");
    jitter_cmd->add_option("--directional-min", config.policy.directional_min,
                           "directional weight lower bound");
    jitter_cmd->add_option("--directional-max", config.policy.directional_max,
                           "directional weight upper bound");
    jitter_cmd->add_option("--ambient-u-max", config.policy.ambient_u_max,
                           "ambient attenuation factor upper bound");
    jitter_cmd->add_option("--n-pose", config.policy.n_pose, "pose variants per record");
    jitter_cmd->add_option("--n-light", config.policy.n_light, "lighting variants per record");

    // schedule
    auto* sched_cmd = app.add_subcommand("schedule", "emit a training schedule");
    std::string sched_manifest_path;
    std::string sched_strategy;
    std::string sched_out;
    double sched_p = 0.0;
    int sched_epochs = 1;
    sched_cmd->add_option("--manifest", sched_manifest_path, "augmented output manifest")
        ->required();
    sched_cmd->add_option("--strategy", sched_strategy, "random or dual")
        ->required()
        ->check(CLI::IsMember({"random", "dual"}));
    sched_cmd->add_option("--p", sched_p, "replacement probability (random strategy)");
    sched_cmd->add_option("--epochs", sched_epochs, "epoch count");
    sched_cmd->add_option("--out", sched_out, "output schedule path (JSON lines)")->required();

    // preview
    auto* preview_cmd = app.add_subcommand("preview", "montage of an original and its variants");
    std::string preview_manifest_path;
    std::string preview_record;
    std::string preview_dir;
    std::string preview_out;
    preview_cmd->add_option("--manifest", preview_manifest_path, "augmented output manifest")
        ->required();
    preview_cmd->add_option("--record", preview_record,
                            "record id (default: first record with variants)");
    preview_cmd->add_option("--dir", preview_dir,
                            "variant image directory (default: the manifest's directory)");
    preview_cmd->add_option("--out", preview_out, "output PNG path")->required();

    // App-level flags remain usable after the subcommand name.
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth->parsed()) {
            const MorphableModel model = build_synthetic_model(
                config.seed, synth_subjects, synth_rank_subject, synth_rank_expression,
                synth_expressions > 0 ? synth_expressions : -1, synth_bands, synth_segments);
            if (ends_with(synth_out, ".json"))
                save_model_json(synth_out, model);
            else
                save_model(synth_out, model);
            write_meta(synth_out, "synth-model", config, {},
                       json{{"subjects", synth_subjects},
                            {"expressions", synth_expressions},
                            {"rank_subject", synth_rank_subject},
                            {"rank_expression", synth_rank_expression},
                            {"bands", synth_bands},
                            {"segments", synth_segments}});
            if (config.verbosity > 0)
                std::cout << "model: " << model.vertex_count() << " vertices, subject rank "
                          << model.subject.count() << ", expression rank "
                          << model.expression.count() << " -> " << synth_out << "\n";
            return 0;
        }

        if (fit_cmd->parsed()) {
            const MorphableModel model = load_model_any(fit_model_path);
            const std::vector<LandmarkSet> sets =
                landmarks_from_json(read_text_file(fit_landmarks_path));
            const FitResult result = fit(model, sets, config.fit);
            write_text_file(fit_out, fit_result_to_json(result));
            std::vector<std::string> inputs{fit_model_path, fit_landmarks_path};
            for (const auto& set : sets) inputs.push_back("image:" + set.image_id);
            write_meta(fit_out, "fit", config, inputs,
                       json{{"images", result.image_count()},
                            {"iterations", result.iterations},
                            {"converged", result.converged}});
            if (config.verbosity > 0) {
                for (int n = 0; n < result.image_count(); ++n)
                    std::cout << result.image_ids[static_cast<std::size_t>(n)] << ": rms "
                              << result.rms_px[static_cast<std::size_t>(n)] << " px"
                              << (result.used[static_cast<std::size_t>(n)] ? "" : " (dropped)")
                              << "\n";
                std::cout << (result.converged ? "converged" : "iteration cap reached") << " after "
                          << result.iterations << " iterations -> " << fit_out << "\n";
            }
            return 0;
        }

        if (pose_cmd->parsed()) {
            const MorphableModel model = load_model_any(pose_model_path);
            const FitResult fitted = fit_result_from_json(read_text_file(pose_fit_path));
            const Image8 source = read_png(pose_image_path);
            const int index = find_image_index(fitted, pose_image_id);
            const OrthographicCamera& camera = fitted.cameras[static_cast<std::size_t>(index)];
            PoseSpec pose;
            pose.yaw = pose_yaw * kDegree + (pose_absolute ? 0.0 : camera.yaw);
            pose.pitch = pose_pitch * kDegree + (pose_absolute ? 0.0 : camera.pitch);
            pose.roll = pose_roll * kDegree + (pose_absolute ? 0.0 : camera.roll);
            pose.width = pose_width > 0 ? pose_width : source.width;
            pose.height = pose_height > 0 ? pose_height : source.height;
            const Image8 rendered = render_pose(source, model, fitted, index, pose);
            write_png(pose_out, rendered);
            write_meta(pose_out, "render-pose", config,
                       {pose_model_path, pose_fit_path, pose_image_path,
                        "image:" + fitted.image_ids[static_cast<std::size_t>(index)]},
                       json{{"yaw", pose.yaw},
                            {"pitch", pose.pitch},
                            {"roll", pose.roll},
                            {"width", pose.width},
                            {"height", pose.height}});
            return 0;
        }

        if (light_cmd->parsed()) {
            const MorphableModel model = load_model_any(light_model_path);
            const FitResult fitted = fit_result_from_json(read_text_file(light_fit_path));
            const Image8 source = read_png(light_image_path);
            const int index = find_image_index(fitted, light_image_id);
            Vec3 direction(light_direction[0], light_direction[1], light_direction[2]);
            const double norm = direction.norm();
            if (norm < 1e-12) throw std::invalid_argument("relight: zero light direction");
            LightingSpec light;
            light.direction = direction / norm;
            light.ambient = light_ambient;
            light.directional = light_directional;
            light.validate();
            ImageF modulation;
            const Image8 rendered = relight(source, model, fitted, index, light,
                                            light_modulation_out.empty() ? nullptr : &modulation);
            write_png(light_out, rendered);
            if (!light_modulation_out.empty()) write_float_map(light_modulation_out, modulation);
            write_meta(light_out, "relight", config,
                       {light_model_path, light_fit_path, light_image_path,
                        "image:" + fitted.image_ids[static_cast<std::size_t>(index)]},
                       json{{"direction", {light.direction.x(), light.direction.y(),
                                           light.direction.z()}},
                            {"ambient", light.ambient},
                            {"directional", light.directional}});
            return 0;
        }

        if (jitter_cmd->parsed()) {
            config.policy.yaw_range = jitter_yaw_range * kDegree;
            config.policy.pitch_range = jitter_pitch_range * kDegree;
            config.policy.roll_range = jitter_roll_range * kDegree;
            config.policy.validate();
            const DatasetManifest manifest =
                manifest_from_jsonl(read_text_file(jitter_manifest_path));
            const MorphableModel model = load_model_any(jitter_model_path);
            const int workers = resolve_workers(workers_flag, config);
            const std::string provenance =
                "facejitter jitter seed=" + std::to_string(config.seed) +
                " config=" + hex64(fnv1a64(run_config_to_json(config)));
            const OutputManifest output = augment_batch(manifest, model, config.policy,
                                                        config.seed, workers, jitter_out_dir,
                                                        provenance);
            std::vector<std::string> inputs{jitter_manifest_path, jitter_model_path};
            for (const auto& record : manifest.records) inputs.push_back("record:" + record.id);
            write_meta((std::filesystem::path(jitter_out_dir) / "batch").string(), "jitter",
                       config, inputs,
                       json{{"records", manifest.records.size()}, {"workers", workers}});
            std::size_t failed = 0;
            for (const auto& record : output.records) {
                if (record.failed) {
                    ++failed;
                    std::cerr << "record " << record.id << ": " << record.reason << "\n";
                } else if (config.verbosity > 1) {
                    std::cout << "record " << record.id << ": " << record.variants.size()
                              << " variants\n";
                }
            }
            if (config.verbosity > 0)
                std::cout << output.records.size() - failed << "/" << output.records.size()
                          << " records augmented -> " << jitter_out_dir << "\n";
            if (!output.records.empty() && failed == output.records.size()) {
                std::cerr << "error: every record failed\n";
                return 2;
            }
            return 0;
        }

        if (sched_cmd->parsed()) {
            const OutputManifest manifest =
                output_manifest_from_jsonl(read_text_file(sched_manifest_path));
            const ScheduleStrategy strategy = sched_strategy == "dual"
                                                  ? ScheduleStrategy::dual
                                                  : ScheduleStrategy::random_p;
            const TrainingSchedule schedule =
                build_training_schedule(manifest, strategy, sched_p, sched_epochs, config.seed);
            write_text_file(sched_out, schedule_to_jsonl(schedule));
            write_meta(sched_out, "schedule", config, {sched_manifest_path},
                       json{{"strategy", sched_strategy},
                            {"p", sched_p},
                            {"epochs", sched_epochs},
                            {"entries", schedule.entries.size()}});
            if (config.verbosity > 0)
                std::cout << schedule.entries.size() << " schedule entries -> " << sched_out
                          << "\n";
            return 0;
        }

        if (preview_cmd->parsed()) {
            const OutputManifest manifest =
                output_manifest_from_jsonl(read_text_file(preview_manifest_path));
            const OutputRecord* record = nullptr;
            if (!preview_record.empty()) {
                record = manifest.find(preview_record);
                if (record == nullptr)
                    throw IoError("record '" + preview_record + "' not in the manifest");
            } else {
                for (const auto& candidate : manifest.records)
                    if (!candidate.failed && !candidate.variants.empty()) {
                        record = &candidate;
                        break;
                    }
                if (record == nullptr) throw IoError("manifest holds no record with variants");
            }
            std::filesystem::path dir = preview_dir.empty()
                                            ? std::filesystem::path(preview_manifest_path)
                                                  .parent_path()
                                            : std::filesystem::path(preview_dir);
            std::vector<Image8> tiles;
            tiles.push_back(read_png(record->image_path));
            for (const auto& variant_path : record->variant_paths)
                tiles.push_back(read_png((dir / variant_path).string()));
            write_png(preview_out, montage(tiles));
            std::vector<std::string> inputs{preview_manifest_path, record->image_path};
            for (const auto& variant_path : record->variant_paths)
                inputs.push_back((dir / variant_path).string());
            write_meta(preview_out, "preview", config, inputs,
                       json{{"record", record->id}, {"tiles", tiles.size()}});
            if (config.verbosity > 0)
                std::cout << "preview of " << record->id << " (" << tiles.size() << " tiles) -> "
                          << preview_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::cerr << "error: no subcommand given\n";
    return 1;
}

} // namespace facejitter
