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
#include <string>

#include "compatlab/registry.hpp"

namespace compatlab {

/// Terminal state of one test invocation on one device.
///
/// Crashed marks the test that took the runner down; the unexecuted rest
/// of its batch surfaces as SkippedCrash records (Discard strategy only).
enum class OutcomeKind {
    Pass,
    Fail,
    Crashed,
    SkippedCrash,
};

const char* to_string(OutcomeKind kind);
OutcomeKind outcome_kind_from_string(const std::string& name);

struct ExecutionResult {
    std::string test_id;
    std::string target_api;
    DeviceId device;
    OutcomeKind outcome = OutcomeKind::Pass;
    /// Exception class for Fail/Crashed, e.g. "NoSuchMethodError". Empty
    /// for Pass/SkippedCrash.
    std::string error_kind;
    std::string message;
    /// Lifecycle step id that failed, empty when the TEST step itself did.
    std::string failed_phase;
    std::int64_t batch_index = 0;
    /// Logical tick on the device clock when the result was produced.
    std::int64_t timestamp = 0;

    bool operator==(const ExecutionResult&) const = default;
};

}  // namespace compatlab
