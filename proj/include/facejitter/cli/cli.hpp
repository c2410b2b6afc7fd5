/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/cli/cli.hpp
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
#include <string>
#include <string_view>
#include <vector>

#include "facejitter/augment/augment.hpp"
#include "facejitter/fitting/fitting.hpp"

namespace facejitter {

/// Settings shared by every subcommand, loadable from one JSON config file.
/// Command-line flags override file values; workers resolves through the
/// FACEJITTER_WORKERS environment variable when neither is given.
struct RunConfig {
    std::uint64_t seed = 0;
    int workers = 0; ///< 0: unset
    int verbosity = 1;
    FitConfig fit;
    JitterPolicy policy;
};

/// Strict parse: unknown keys anywhere in the file are errors.
RunConfig run_config_from_json(const std::string& json_text);
std::string run_config_to_json(const RunConfig& config);

/// 64-bit FNV-1a, used to stamp a config hash into output metadata.
std::uint64_t fnv1a64(std::string_view text);

/// Entry point behind main(). `args` excludes the program name. Returns 0 on
/// success, 1 on user error, 2 when a batch completes with every record
/// failed.
int run_cli(const std::vector<std::string>& args);

} // namespace facejitter
