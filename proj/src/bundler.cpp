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

#include "compatlab/bundler.hpp"

#include <json.hpp>

#include "compatlab/error.hpp"
#include "compatlab/hash.hpp"
#include "compatlab/json_io.hpp"

namespace compatlab {

TestBundle make_bundle(std::uint64_t version,
                       const std::vector<TestCase>& cases) {
    TestBundle bundle;
    bundle.version = version;
    for (const TestCase& test : cases) {
        if (!bundle.cases.emplace(test.id, test).second) {
            throw ValidationError("duplicate test id '" + test.id +
                                  "' in bundle");
        }
    }
    bundle.checksum = bundle_checksum(bundle);
    return bundle;
}

std::string canonical_cases_json(const TestBundle& bundle) {
    // nlohmann objects are backed by std::map, so keys come out sorted;
    // dump() without arguments emits no insignificant whitespace.
    const nlohmann::json j = bundle.cases;
    return j.dump();
}

std::uint64_t bundle_checksum(const TestBundle& bundle) {
    return fnv1a64(canonical_cases_json(bundle));
}

namespace {

std::string case_content(const TestCase& test) {
    return nlohmann::json(test).dump();
}

}  // namespace

BundlePatch diff(const TestBundle& base, const TestBundle& target) {
    if (target.version != base.version + 1) {
        throw PatchError("diff requires consecutive versions, got " +
                         std::to_string(base.version) + " -> " +
                         std::to_string(target.version));
    }
    BundlePatch patch;
    patch.base_version = base.version;
    patch.target_version = target.version;
    patch.base_checksum = bundle_checksum(base);
    patch.target_checksum = bundle_checksum(target);
    for (const auto& [id, test] : target.cases) {
        const auto it = base.cases.find(id);
        if (it == base.cases.end()) {
            patch.added.push_back(test);
        } else if (case_content(it->second) != case_content(test)) {
            patch.updated.push_back(test);
        }
    }
    for (const auto& [id, test] : base.cases) {
        if (!target.cases.contains(id)) {
            patch.removed.push_back(id);
        }
    }
    return patch;
}

TestBundle apply_patch(const TestBundle& base, const BundlePatch& patch) {
    if (patch.base_version != base.version) {
        throw PatchError("patch expects base version " +
                         std::to_string(patch.base_version) + ", bundle is " +
                         std::to_string(base.version));
    }
    if (patch.target_version != patch.base_version + 1) {
        throw PatchError("patch target version must be base version + 1");
    }
    if (patch.base_checksum != bundle_checksum(base)) {
        throw PatchError("base checksum mismatch, full bundle required");
    }
    TestBundle result;
    result.version = patch.target_version;
    result.cases = base.cases;
    for (const std::string& id : patch.removed) {
        if (result.cases.erase(id) == 0) {
            throw PatchError("patch removes unknown test id '" + id +
                             "', bundle corrupt");
        }
    }
    for (const TestCase& test : patch.updated) {
        const auto it = result.cases.find(test.id);
        if (it == result.cases.end()) {
            throw PatchError("patch updates unknown test id '" + test.id +
                             "', bundle corrupt");
        }
        it->second = test;
    }
    for (const TestCase& test : patch.added) {
        if (!result.cases.emplace(test.id, test).second) {
            throw PatchError("patch adds existing test id '" + test.id +
                             "', bundle corrupt");
        }
    }
    result.checksum = bundle_checksum(result);
    if (result.checksum != patch.target_checksum) {
        throw PatchError("patched bundle fails target checksum");
    }
    return result;
}

}  // namespace compatlab
