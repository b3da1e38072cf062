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

#include <iosfwd>
#include <string>
#include <vector>

namespace compatlab {

/// xUnit-style lifecycle phases, in their mandatory execution order.
enum class Phase {
    BeforeClass,
    Before,
    Test,
    After,
    AfterClass,
};

const char* to_string(Phase phase);
Phase phase_from_string(const std::string& name);

enum class TestSource {
    Aosp,
    Generated,
    Custom,
};

const char* to_string(TestSource source);
TestSource source_from_string(const std::string& name);

struct LifecycleStep {
    Phase phase = Phase::Test;
    std::string step_id;

    bool operator==(const LifecycleStep&) const = default;
};

/// One dispatchable unit targeting a single framework API.
struct TestCase {
    std::string id;
    std::string target_api;  // fully qualified, e.g. "android.util.LongSparseArray#valueAt"
    TestSource source = TestSource::Custom;
    int invocation_length = 1;  // declared number of API invocation statements
    std::vector<LifecycleStep> lifecycle;

    bool operator==(const TestCase&) const = default;
};

/// Throws ValidationError unless the case satisfies its invariants:
/// nonempty target_api, invocation_length >= 1, exactly one TEST step,
/// phases non-decreasing.
void validate_test_case(const TestCase& test);

/// Parses a JSON Lines test bank file. Cases come back in file order.
/// Throws ParseError naming the line number on malformed input and
/// ValidationError naming the id on duplicates.
std::vector<TestCase> ingest(const std::string& path);

/// Same as ingest(path) but reading from an already-open stream.
std::vector<TestCase> ingest(std::istream& in, const std::string& origin);

/// Keeps, per target API, only the case with the fewest invocation
/// statements (ties broken by lexicographically smallest id). Survivors
/// keep their original relative order.
std::vector<TestCase> dedup_by_target_api(const std::vector<TestCase>& cases);

/// Immutable master test list, built once at campaign start.
class TestBank {
public:
    TestBank() = default;
    explicit TestBank(std::vector<TestCase> cases);

    static TestBank from_file(const std::string& path, bool dedup = true);

    const std::vector<TestCase>& cases() const { return cases_; }
    std::size_t size() const { return cases_.size(); }
    bool empty() const { return cases_.empty(); }

    /// Test ids in canonical dispatch order (ingestion order).
    std::vector<std::string> ordered_ids() const;

    const TestCase* find(const std::string& id) const;

private:
    std::vector<TestCase> cases_;
};

}  // namespace compatlab
