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

#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "compatlab/bundler.hpp"
#include "compatlab/error.hpp"
#include "compatlab/json_io.hpp"
#include "helpers.hpp"

using namespace compatlab;

namespace {

std::vector<TestCase> random_cases(std::mt19937_64& rng, std::size_t max_n) {
    std::vector<TestCase> cases;
    const std::size_t n = rng() % (max_n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        TestCase test = testutil::make_case(
            "case-" + std::to_string(i),
            "api.Pkg#m" + std::to_string(rng() % (max_n * 2 + 1)),
            1 + static_cast<int>(rng() % 9));
        if (rng() & 1) {
            test.lifecycle.insert(test.lifecycle.begin(),
                                  {Phase::Before, "setUp"});
        }
        cases.push_back(test);
    }
    return cases;
}

/// Mutates `cases` into a plausible next version: some removals, some
/// content updates, some additions.
std::vector<TestCase> mutate_cases(std::mt19937_64& rng,
                                   std::vector<TestCase> cases) {
    std::vector<TestCase> next;
    for (TestCase& test : cases) {
        const auto roll = rng() % 10;
        if (roll == 0) continue;  // removed
        if (roll <= 3) test.invocation_length += 1;
        next.push_back(std::move(test));
    }
    const std::size_t additions = rng() % 4;
    for (std::size_t i = 0; i < additions; ++i) {
        next.push_back(testutil::make_case(
            "new-" + std::to_string(rng() % 1000) + "-" + std::to_string(i),
            "api.New#m" + std::to_string(i)));
    }
    return next;
}

}  // namespace

TEST_CASE("make_bundle fills the checksum and indexes cases by id") {
    const auto bundle = make_bundle(1, {testutil::make_case("a", "x.Y#m")});
    CHECK(bundle.version == 1);
    CHECK(bundle.cases.count("a") == 1);
    CHECK(bundle.checksum != 0);
    CHECK(bundle.checksum == bundle_checksum(bundle));
}

TEST_CASE("duplicate case ids are rejected") {
    CHECK_THROWS_AS(make_bundle(1, {testutil::make_case("a", "x.Y#m1"),
                                    testutil::make_case("a", "x.Y#m2")}),
                    ValidationError);
}

TEST_CASE("the checksum covers content, not the version number") {
    const std::vector<TestCase> cases{testutil::make_case("a", "x.Y#m1"),
                                      testutil::make_case("b", "x.Y#m2")};
    const auto v1 = make_bundle(1, cases);
    const auto v9 = make_bundle(9, cases);
    CHECK(v1.checksum == v9.checksum);

    std::vector<TestCase> reordered{cases[1], cases[0]};
    CHECK(make_bundle(1, reordered).checksum == v1.checksum);

    std::vector<TestCase> changed = cases;
    changed[0].invocation_length = 7;
    CHECK(make_bundle(1, changed).checksum != v1.checksum);
}

TEST_CASE("diff splits changes into added, updated and removed") {
    const auto base = make_bundle(3, {testutil::make_case("keep", "x.Y#m1"),
                                      testutil::make_case("drop", "x.Y#m2"),
                                      testutil::make_case("bump", "x.Y#m3", 2)});
    const auto target =
        make_bundle(4, {testutil::make_case("keep", "x.Y#m1"),
                        testutil::make_case("bump", "x.Y#m3", 5),
                        testutil::make_case("fresh", "x.Y#m4")});
    const BundlePatch patch = diff(base, target);
    CHECK(patch.base_version == 3);
    CHECK(patch.target_version == 4);
    REQUIRE(patch.added.size() == 1);
    CHECK(patch.added[0].id == "fresh");
    REQUIRE(patch.updated.size() == 1);
    CHECK(patch.updated[0].id == "bump");
    CHECK(patch.updated[0].invocation_length == 5);
    CHECK(patch.removed == std::vector<std::string>{"drop"});
    CHECK(patch.base_checksum == base.checksum);
    CHECK(patch.target_checksum == target.checksum);
}

TEST_CASE("an unchanged case never rides in a patch") {
    const std::vector<TestCase> cases{testutil::make_case("a", "x.Y#m1"),
                                      testutil::make_case("b", "x.Y#m2")};
    const BundlePatch patch = diff(make_bundle(1, cases), make_bundle(2, cases));
    CHECK(patch.added.empty());
    CHECK(patch.updated.empty());
    CHECK(patch.removed.empty());
}

TEST_CASE("diff requires consecutive versions") {
    const auto a = make_bundle(1, {});
    const auto c = make_bundle(3, {});
    CHECK_THROWS_AS(diff(a, c), PatchError);
    CHECK_THROWS_AS(diff(c, a), PatchError);
}

TEST_CASE("apply_patch rejects mismatched bases") {
    const auto base = make_bundle(1, {testutil::make_case("a", "x.Y#m1")});
    const auto target = make_bundle(2, {testutil::make_case("a", "x.Y#m1"),
                                        testutil::make_case("b", "x.Y#m2")});
    const BundlePatch patch = diff(base, target);

    SUBCASE("wrong version") {
        const auto other = make_bundle(5, {testutil::make_case("a", "x.Y#m1")});
        CHECK_THROWS_AS(apply_patch(other, patch), PatchError);
    }
    SUBCASE("right version, wrong content") {
        const auto other = make_bundle(1, {testutil::make_case("a", "x.Y#zz")});
        try {
            apply_patch(other, patch);
            FAIL("expected PatchError");
        } catch (const PatchError& e) {
            CHECK(std::string(e.what()).find("full bundle") !=
                  std::string::npos);
        }
    }
    SUBCASE("added id already present") {
        BundlePatch broken = patch;
        broken.added[0].id = "a";
        CHECK_THROWS_AS(apply_patch(base, broken), PatchError);
    }
    SUBCASE("removed id absent") {
        BundlePatch broken = patch;
        broken.removed.push_back("ghost");
        CHECK_THROWS_AS(apply_patch(base, broken), PatchError);
    }
}

TEST_CASE("roundtrip: apply(diff(a,b), a) == b on randomized bundle pairs") {
    std::mt19937_64 rng(101);
    for (int round = 0; round < 200; ++round) {
        CAPTURE(round);
        const std::uint64_t version = rng() % 50;
        const auto base_cases = random_cases(rng, 12);
        const auto base = make_bundle(version, base_cases);
        const auto target =
            make_bundle(version + 1, mutate_cases(rng, base_cases));

        const BundlePatch patch = diff(base, target);
        const TestBundle patched = apply_patch(base, patch);
        REQUIRE(patched == target);
        CHECK(patched.checksum == target.checksum);
        CHECK(bundle_checksum(patched) == target.checksum);
    }
}

TEST_CASE("a one-case patch is a sliver of the full bundle") {
    std::vector<TestCase> cases;
    for (int i = 0; i < 5000; ++i) {
        cases.push_back(testutil::make_case("case-" + std::to_string(i),
                                            "api.Big#m" + std::to_string(i)));
    }
    const auto base = make_bundle(1, cases);
    std::vector<TestCase> next_cases = cases;
    next_cases[2500].invocation_length = 9;
    const auto target = make_bundle(2, next_cases);

    const std::string full = nlohmann::json(target).dump();
    const std::string patch = nlohmann::json(diff(base, target)).dump();
    CAPTURE(full.size());
    CAPTURE(patch.size());
    CHECK(patch.size() * 20 < full.size());
}

TEST_CASE("bundle and patch JSON round-trips") {
    const auto base = make_bundle(1, {testutil::make_case("a", "x.Y#m1", 2)});
    const auto target = make_bundle(2, {testutil::make_case("a", "x.Y#m1", 3),
                                        testutil::make_case("b", "x.Y#m2")});
    const nlohmann::json bundle_json = base;
    CHECK(bundle_json.get<TestBundle>() == base);
    const BundlePatch patch = diff(base, target);
    const nlohmann::json patch_json = patch;
    CHECK(patch_json.get<BundlePatch>() == patch);
}
