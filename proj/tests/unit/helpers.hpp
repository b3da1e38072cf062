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

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "compatlab/registry.hpp"
#include "compatlab/testbank.hpp"

namespace testutil {

/// Self-deleting temp file seeded with `content`.
class TempFile {
public:
    explicit TempFile(const std::string& content,
                      const std::string& suffix = ".jsonl") {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("compatlab-test-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++) + suffix);
        std::ofstream out(path_, std::ios::binary);
        out << content;
    }
    ~TempFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    std::string path() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

/// Self-deleting temp directory.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("compatlab-dir-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string path() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

inline std::string data_path(const std::string& name) {
#ifdef COMPATLAB_DATA_DIR
    return std::string(COMPATLAB_DATA_DIR) + "/" + name;
#else
    return "data/" + name;
#endif
}

inline compatlab::TestCase make_case(const std::string& id,
                                     const std::string& api,
                                     int invocation_length = 1) {
    compatlab::TestCase test;
    test.id = id;
    test.target_api = api;
    test.source = compatlab::TestSource::Generated;
    test.invocation_length = invocation_length;
    test.lifecycle = {{compatlab::Phase::Test, "test"}};
    return test;
}

/// n single-step cases "t-0001".."t-nnnn", one synthetic API each.
inline std::vector<compatlab::TestCase> synthetic_cases(std::size_t n) {
    std::vector<compatlab::TestCase> cases;
    cases.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "t-%04zu", i);
        cases.push_back(make_case(id, "synthetic.Api#m" + std::to_string(i)));
    }
    return cases;
}

inline compatlab::DeviceProfile make_profile(const std::string& brand,
                                             const std::string& model,
                                             int api_level) {
    compatlab::DeviceProfile profile;
    profile.brand = brand;
    profile.model = model;
    profile.api_level = api_level;
    profile.soc = "soc";
    profile.language = "en-US";
    profile.screen_w = 1080;
    profile.screen_h = 1920;
    return profile;
}

}  // namespace testutil
