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

#include "compatlab/testbank.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "compatlab/error.hpp"
#include "compatlab/json_io.hpp"

namespace compatlab {

const char* to_string(Phase phase) {
    switch (phase) {
        case Phase::BeforeClass: return "BEFORE_CLASS";
        case Phase::Before: return "BEFORE";
        case Phase::Test: return "TEST";
        case Phase::After: return "AFTER";
        case Phase::AfterClass: return "AFTER_CLASS";
    }
    return "TEST";
}

Phase phase_from_string(const std::string& name) {
    if (name == "BEFORE_CLASS") return Phase::BeforeClass;
    if (name == "BEFORE") return Phase::Before;
    if (name == "TEST") return Phase::Test;
    if (name == "AFTER") return Phase::After;
    if (name == "AFTER_CLASS") return Phase::AfterClass;
    throw ValidationError("unknown lifecycle phase: " + name);
}

const char* to_string(TestSource source) {
    switch (source) {
        case TestSource::Aosp: return "AOSP";
        case TestSource::Generated: return "GENERATED";
        case TestSource::Custom: return "CUSTOM";
    }
    return "CUSTOM";
}

TestSource source_from_string(const std::string& name) {
    if (name == "AOSP") return TestSource::Aosp;
    if (name == "GENERATED") return TestSource::Generated;
    if (name == "CUSTOM") return TestSource::Custom;
    throw ValidationError("unknown test source: " + name);
}

void validate_test_case(const TestCase& test) {
    if (test.id.empty()) {
        throw ValidationError("test case: id must be nonempty");
    }
    if (test.target_api.empty()) {
        throw ValidationError("test case " + test.id +
                              ": target_api must be nonempty");
    }
    if (test.invocation_length < 1) {
        throw ValidationError("test case " + test.id +
                              ": invocation_length must be >= 1");
    }
    int test_steps = 0;
    Phase previous = Phase::BeforeClass;
    bool first = true;
    for (const auto& step : test.lifecycle) {
        if (step.phase == Phase::Test) {
            ++test_steps;
        }
        if (!first && step.phase < previous) {
            throw ValidationError("test case " + test.id +
                                  ": lifecycle phases out of order");
        }
        previous = step.phase;
        first = false;
    }
    if (test_steps != 1) {
        throw ValidationError("test case " + test.id +
                              ": exactly one TEST step required, found " +
                              std::to_string(test_steps));
    }
}

std::vector<TestCase> ingest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open test bank file: " + path);
    }
    return ingest(in, path);
}

std::vector<TestCase> ingest(std::istream& in, const std::string& origin) {
    std::vector<TestCase> cases;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        TestCase test;
        try {
            test = nlohmann::json::parse(line).get<TestCase>();
            validate_test_case(test);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(origin + ": line " + std::to_string(line_no) +
                             ": " + e.what());
        }
        if (!seen.insert(test.id).second) {
            throw ValidationError(origin + ": line " + std::to_string(line_no) +
                                  ": duplicate test id \"" + test.id + "\"");
        }
        cases.push_back(std::move(test));
    }
    return cases;
}

std::vector<TestCase> dedup_by_target_api(const std::vector<TestCase>& cases) {
    // Winner per API: minimal invocation_length, then smallest id.
    std::map<std::string, const TestCase*> winner;
    for (const auto& test : cases) {
        auto [it, inserted] = winner.emplace(test.target_api, &test);
        if (inserted) {
            continue;
        }
        const TestCase* best = it->second;
        if (test.invocation_length < best->invocation_length ||
            (test.invocation_length == best->invocation_length &&
             test.id < best->id)) {
            it->second = &test;
        }
    }
    std::vector<TestCase> result;
    result.reserve(winner.size());
    for (const auto& test : cases) {
        if (winner.at(test.target_api) == &test) {
            result.push_back(test);
        }
    }
    return result;
}

TestBank::TestBank(std::vector<TestCase> cases) : cases_(std::move(cases)) {
    std::set<std::string> seen;
    for (const auto& test : cases_) {
        validate_test_case(test);
        if (!seen.insert(test.id).second) {
            throw ValidationError("test bank: duplicate test id \"" + test.id +
                                  "\"");
        }
    }
}

TestBank TestBank::from_file(const std::string& path, bool dedup) {
    auto cases = ingest(path);
    if (dedup) {
        cases = dedup_by_target_api(cases);
    }
    return TestBank(std::move(cases));
}

std::vector<std::string> TestBank::ordered_ids() const {
    std::vector<std::string> ids;
    ids.reserve(cases_.size());
    for (const auto& test : cases_) {
        ids.push_back(test.id);
    }
    return ids;
}

const TestCase* TestBank::find(const std::string& id) const {
    for (const auto& test : cases_) {
        if (test.id == id) {
            return &test;
        }
    }
    return nullptr;
}

}  // namespace compatlab
