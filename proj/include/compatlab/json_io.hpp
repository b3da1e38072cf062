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

#include <json.hpp>

#include "compatlab/analyzer.hpp"
#include "compatlab/bundler.hpp"
#include "compatlab/client_sim.hpp"
#include "compatlab/registry.hpp"
#include "compatlab/results.hpp"
#include "compatlab/scheduler.hpp"
#include "compatlab/testbank.hpp"

// from_json validates value invariants and throws ValidationError with
// the offending field named; structural problems (wrong JSON type,
// missing key) surface as nlohmann exceptions for callers to wrap.

namespace compatlab {

void to_json(nlohmann::json& j, const DeviceProfile& profile);
void from_json(const nlohmann::json& j, DeviceProfile& profile);

void to_json(nlohmann::json& j, const LifecycleStep& step);
void from_json(const nlohmann::json& j, LifecycleStep& step);

void to_json(nlohmann::json& j, const TestCase& test);
void from_json(const nlohmann::json& j, TestCase& test);

void to_json(nlohmann::json& j, const CrashReport& crash);
void from_json(const nlohmann::json& j, CrashReport& crash);

void to_json(nlohmann::json& j, const TestBundle& bundle);
void from_json(const nlohmann::json& j, TestBundle& bundle);

void to_json(nlohmann::json& j, const BundlePatch& patch);
void from_json(const nlohmann::json& j, BundlePatch& patch);

void to_json(nlohmann::json& j, const ExecutionResult& result);
void from_json(const nlohmann::json& j, ExecutionResult& result);

void to_json(nlohmann::json& j, const DeviceState& state);
void from_json(const nlohmann::json& j, DeviceState& state);

void to_json(nlohmann::json& j, const OracleRule& rule);
void from_json(const nlohmann::json& j, OracleRule& rule);

void to_json(nlohmann::json& j, const SurveyResponse& response);
void from_json(const nlohmann::json& j, SurveyResponse& response);

void to_json(nlohmann::json& j, const SessionEvent& event);
void from_json(const nlohmann::json& j, SessionEvent& event);

}  // namespace compatlab
