/*
 * facejitter - semi-synthetic pose and lighting augmentation for face imagery.
 *
 * File: include/facejitter/core/errors.hpp
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

#include <stdexcept>
#include <string>

namespace facejitter {

/// Thrown when a camera estimation problem is rank-deficient or too
/// ill-conditioned to solve (e.g. coplanar 3-d points).
struct DegenerateConfiguration : std::runtime_error {
    explicit DegenerateConfiguration(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a whole fit cannot proceed (e.g. every image degenerate).
struct FitFailure : std::runtime_error {
    explicit FitFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown on malformed or unreadable files.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an operation that needs at least one usable pixel gets none
/// (e.g. a head mask that misses the frame entirely).
struct EmptyField : std::runtime_error {
    explicit EmptyField(const std::string& what) : std::runtime_error(what) {}
};

} // namespace facejitter
