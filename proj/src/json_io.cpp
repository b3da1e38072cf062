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

#include "compatlab/json_io.hpp"

#include "compatlab/error.hpp"

namespace compatlab {

namespace {

template <typename T>
void read_optional(const nlohmann::json& j, const char* key,
                   std::optional<T>& out) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        out.reset();
    } else {
        out = it->get<T>();
    }
}

}  // namespace

void to_json(nlohmann::json& j, const DeviceProfile& profile) {
    j = nlohmann::json{{"brand", profile.brand},
                       {"model", profile.model},
                       {"api_level", profile.api_level},
                       {"soc", profile.soc},
                       {"language", profile.language},
                       {"screen_w", profile.screen_w},
                       {"screen_h", profile.screen_h}};
}

void from_json(const nlohmann::json& j, DeviceProfile& profile) {
    j.at("brand").get_to(profile.brand);
    j.at("model").get_to(profile.model);
    j.at("api_level").get_to(profile.api_level);
    j.at("soc").get_to(profile.soc);
    j.at("language").get_to(profile.language);
    j.at("screen_w").get_to(profile.screen_w);
    j.at("screen_h").get_to(profile.screen_h);
    validate_profile(profile);
}

void to_json(nlohmann::json& j, const LifecycleStep& step) {
    j = nlohmann::json{{"phase", to_string(step.phase)},
                       {"step_id", step.step_id}};
}

void from_json(const nlohmann::json& j, LifecycleStep& step) {
    step.phase = phase_from_string(j.at("phase").get<std::string>());
    j.at("step_id").get_to(step.step_id);
}

void to_json(nlohmann::json& j, const TestCase& test) {
    j = nlohmann::json{{"id", test.id},
                       {"target_api", test.target_api},
                       {"source", to_string(test.source)},
                       {"invocation_length", test.invocation_length},
                       {"lifecycle", test.lifecycle}};
}

void from_json(const nlohmann::json& j, TestCase& test) {
    j.at("id").get_to(test.id);
    j.at("target_api").get_to(test.target_api);
    test.source = source_from_string(j.at("source").get<std::string>());
    j.at("invocation_length").get_to(test.invocation_length);
    j.at("lifecycle").get_to(test.lifecycle);
    validate_test_case(test);
}

void to_json(nlohmann::json& j, const CrashReport& crash) {
    j = nlohmann::json{{"batch_index", crash.batch_index},
                       {"crashed_at", crash.crashed_at}};
}

void from_json(const nlohmann::json& j, CrashReport& crash) {
    j.at("batch_index").get_to(crash.batch_index);
    j.at("crashed_at").get_to(crash.crashed_at);
}

void to_json(nlohmann::json& j, const TestBundle& bundle) {
    j = nlohmann::json{{"version", bundle.version},
                       {"cases", bundle.cases},
                       {"checksum", bundle.checksum}};
}

void from_json(const nlohmann::json& j, TestBundle& bundle) {
    j.at("version").get_to(bundle.version);
    j.at("cases").get_to(bundle.cases);
    // The checksum is derived from the cases; hand-written bundles may
    // omit it.
    if (j.contains("checksum")) {
        j.at("checksum").get_to(bundle.checksum);
    } else {
        bundle.checksum = bundle_checksum(bundle);
    }
}

void to_json(nlohmann::json& j, const BundlePatch& patch) {
    j = nlohmann::json{{"base_version", patch.base_version},
                       {"target_version", patch.target_version},
                       {"added", patch.added},
                       {"updated", patch.updated},
                       {"removed", patch.removed},
                       {"base_checksum", patch.base_checksum},
                       {"target_checksum", patch.target_checksum}};
}

void from_json(const nlohmann::json& j, BundlePatch& patch) {
    j.at("base_version").get_to(patch.base_version);
    j.at("target_version").get_to(patch.target_version);
    j.at("added").get_to(patch.added);
    j.at("updated").get_to(patch.updated);
    j.at("removed").get_to(patch.removed);
    j.at("base_checksum").get_to(patch.base_checksum);
    j.at("target_checksum").get_to(patch.target_checksum);
}

void to_json(nlohmann::json& j, const ExecutionResult& result) {
    j = nlohmann::json{{"test_id", result.test_id},
                       {"target_api", result.target_api},
                       {"device", result.device},
                       {"outcome", to_string(result.outcome)},
                       {"error_kind", result.error_kind},
                       {"message", result.message},
                       {"failed_phase", result.failed_phase},
                       {"batch_index", result.batch_index},
                       {"timestamp", result.timestamp}};
}

void from_json(const nlohmann::json& j, ExecutionResult& result) {
    j.at("test_id").get_to(result.test_id);
    j.at("target_api").get_to(result.target_api);
    j.at("device").get_to(result.device);
    result.outcome =
        outcome_kind_from_string(j.at("outcome").get<std::string>());
    j.at("error_kind").get_to(result.error_kind);
    j.at("message").get_to(result.message);
    j.at("failed_phase").get_to(result.failed_phase);
    j.at("batch_index").get_to(result.batch_index);
    j.at("timestamp").get_to(result.timestamp);
}

void to_json(nlohmann::json& j, const DeviceState& state) {
    j = nlohmann::json{{"screen_on", state.screen_on},
                       {"idle_mode", state.idle_mode},
                       {"memory_usage", state.memory_usage},
                       {"battery_level", state.battery_level},
                       {"charging", state.charging}};
}

void from_json(const nlohmann::json& j, DeviceState& state) {
    j.at("screen_on").get_to(state.screen_on);
    j.at("idle_mode").get_to(state.idle_mode);
    j.at("memory_usage").get_to(state.memory_usage);
    j.at("battery_level").get_to(state.battery_level);
    j.at("charging").get_to(state.charging);
    if (state.memory_usage < 0.0 || state.memory_usage > 1.0) {
        throw ValidationError("memory_usage outside [0, 1]");
    }
    if (state.battery_level < 0.0 || state.battery_level > 1.0) {
        throw ValidationError("battery_level outside [0, 1]");
    }
}

void to_json(nlohmann::json& j, const OracleRule& rule) {
    j = nlohmann::json{{"api", rule.api},
                       {"outcome", rule.outcome == OutcomeKind::Pass ? "pass"
                                   : rule.outcome == OutcomeKind::Fail
                                       ? "fail"
                                       : "crash"}};
    if (rule.step_id) j["step_id"] = *rule.step_id;
    if (rule.brand) j["brand"] = *rule.brand;
    if (rule.model) j["model"] = *rule.model;
    if (rule.api_level) j["api_level"] = *rule.api_level;
    if (rule.api_level_min) j["api_level_min"] = *rule.api_level_min;
    if (rule.api_level_max) j["api_level_max"] = *rule.api_level_max;
    if (!rule.error_kind.empty()) j["error_kind"] = rule.error_kind;
    if (!rule.message.empty()) j["message"] = rule.message;
}

void from_json(const nlohmann::json& j, OracleRule& rule) {
    j.at("api").get_to(rule.api);
    if (rule.api.empty()) {
        throw ValidationError("oracle rule: api must be nonempty");
    }
    read_optional(j, "step_id", rule.step_id);
    read_optional(j, "brand", rule.brand);
    read_optional(j, "model", rule.model);
    read_optional(j, "api_level", rule.api_level);
    read_optional(j, "api_level_min", rule.api_level_min);
    read_optional(j, "api_level_max", rule.api_level_max);
    if (rule.api_level && (rule.api_level_min || rule.api_level_max)) {
        throw ValidationError(
            "oracle rule: api_level excludes api_level_min/max");
    }
    const std::string outcome = j.at("outcome").get<std::string>();
    if (outcome == "pass") {
        rule.outcome = OutcomeKind::Pass;
    } else if (outcome == "fail") {
        rule.outcome = OutcomeKind::Fail;
    } else if (outcome == "crash") {
        rule.outcome = OutcomeKind::Crashed;
    } else {
        throw ValidationError("oracle rule: unknown outcome '" + outcome +
                              "'");
    }
    rule.error_kind = j.value("error_kind", std::string{});
    rule.message = j.value("message", std::string{});
    if (rule.outcome == OutcomeKind::Fail && rule.error_kind.empty()) {
        throw ValidationError("oracle rule: fail requires error_kind");
    }
}

void to_json(nlohmann::json& j, const SurveyResponse& response) {
    j = nlohmann::json{{"question_id", response.question_id},
                       {"rating", response.rating}};
}

void from_json(const nlohmann::json& j, SurveyResponse& response) {
    j.at("question_id").get_to(response.question_id);
    j.at("rating").get_to(response.rating);
    if (response.question_id < 1 || response.question_id > 6) {
        throw ValidationError("question_id outside [1, 6]");
    }
    if (response.rating < 1 || response.rating > 5) {
        throw ValidationError("rating outside [1, 5]");
    }
}

void to_json(nlohmann::json& j, const SessionEvent& event) {
    j = nlohmann::json{{"tick", event.tick},
                       {"what", event.what},
                       {"detail", event.detail}};
}

void from_json(const nlohmann::json& j, SessionEvent& event) {
    j.at("tick").get_to(event.tick);
    j.at("what").get_to(event.what);
    j.at("detail").get_to(event.detail);
}

}  // namespace compatlab
