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

#include "compatlab/results.hpp"

#include "compatlab/error.hpp"

namespace compatlab {

const char* to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::Pass:
            return "PASS";
        case OutcomeKind::Fail:
            return "FAIL";
        case OutcomeKind::Crashed:
            return "CRASH";
        case OutcomeKind::SkippedCrash:
            return "SKIPPED_CRASH";
    }
    return "PASS";
}

OutcomeKind outcome_kind_from_string(const std::string& name) {
    if (name == "PASS") return OutcomeKind::Pass;
    if (name == "FAIL") return OutcomeKind::Fail;
    if (name == "CRASH") return OutcomeKind::Crashed;
    if (name == "SKIPPED_CRASH") return OutcomeKind::SkippedCrash;
    throw ValidationError("unknown outcome '" + name + "'");
}

}  // namespace compatlab
