/*
 * Copyright 2026 The compatlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "compatlab/testbank.hpp"

namespace compatlab {

/// Versioned set of test cases a device holds locally. Devices keep their
/// bundle between sessions; patches bring it forward one version at a time
/// instead of re-shipping everything. Version 0 is the empty bundle.
struct TestBundle {
    std::uint64_t version = 0;
    std::map<std::string, TestCase> cases;
    /// Content hash of the canonical case serialization. The version is
    /// not hashed, so bundles with equal cases have equal checksums.
    std::uint64_t checksum = 0;

    bool operator==(const TestBundle&) const = default;
};

/// Transforms a bundle of `base_version` into `target_version`, which is
/// always base_version + 1. The checksums guard both ends: the base hash
/// rejects application to the wrong or a corrupted bundle, the target
/// hash verifies the result.
struct BundlePatch {
    std::uint64_t base_version = 0;
    std::uint64_t target_version = 0;
    std::vector<TestCase> added;
    std::vector<TestCase> updated;
    std::vector<std::string> removed;
    std::uint64_t base_checksum = 0;
    std::uint64_t target_checksum = 0;

    bool operator==(const BundlePatch&) const = default;
};

/// Builds a bundle with its checksum filled in. Duplicate case ids throw
/// ValidationError.
TestBundle make_bundle(std::uint64_t version,
                       const std::vector<TestCase>& cases);

/// Canonical serialization of the case set: compact JSON, lexicographically
/// sorted keys, UTF-8, no insignificant whitespace.
std::string canonical_cases_json(const TestBundle& bundle);

/// FNV-1a 64 over canonical_cases_json.
std::uint64_t bundle_checksum(const TestBundle& bundle);

/// Minimal patch taking `base` to `target`: a case lands in `updated`
/// only when its content actually differs. Requires
/// target.version == base.version + 1; throws PatchError otherwise.
BundlePatch diff(const TestBundle& base, const TestBundle& target);

/// Applies `patch` to `base` and returns the target-version bundle.
/// Throws PatchError when the base version or checksum does not match
/// (caller should fall back to a full bundle), when an added id is
/// already present, or when an updated/removed id is absent.
TestBundle apply_patch(const TestBundle& base, const BundlePatch& patch);

}  // namespace compatlab
