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
#include <optional>
#include <string>
#include <vector>

#include "compatlab/analyzer.hpp"
#include "compatlab/client_sim.hpp"
#include "compatlab/registry.hpp"
#include "compatlab/scheduler.hpp"

namespace compatlab {

struct CampaignConfig {
    std::string fleet_path;
    std::string tests_path;
    std::string oracle_path;   // empty: everything passes
    std::string trace_path;    // empty: always-idle fleet
    std::string out_dir;       // empty: nothing persisted
    std::string taxonomy_path; // empty: default taxonomy
    std::string survey_path;   // empty: no survey section in the report
    std::size_t batch_size = 100;
    CrashStrategy strategy = CrashStrategy::Discard;
    int redundancy = 1;
    std::uint64_t seed = 0;
    double crash_prob = 0.0;
    /// Deterministic alternative to crash_prob: every n-th test crashes.
    std::size_t crash_every = 0;
    SuitabilityThresholds thresholds;
    std::int64_t rebuild_penalty = 1;

    void validate() const;  // throws ConfigError
};

struct DeviceReport {
    DeviceProfile profile;
    CoverageStats coverage;
    std::size_t rebuilt = 0;
    std::int64_t final_tick = 0;
    bool completed = false;
};

struct CampaignReport {
    CampaignConfig config;
    std::map<DeviceId, DeviceReport> devices;
    CoverageStats totals;
    /// Fleet makespan: the largest per-device final tick.
    std::int64_t logical_ticks = 0;
    std::vector<CompatibilityIssue> issues;
    std::vector<FlakyRecord> flaky;
    std::size_t rejected_results = 0;
    std::optional<SurveyScores> survey;
    std::vector<ExecutionResult> results;
};

/// Runs a full campaign: loads the input files, registers the fleet,
/// allocates queues, runs one session per device concurrently, then
/// aggregates and analyzes. Deterministic for a fixed config: per-device
/// randomness is keyed on seed and device id, and assembly happens after
/// all sessions finish. With out_dir set, writes report.json, report.md
/// and results.jsonl.
CampaignReport run_campaign(const CampaignConfig& config);

/// Report JSON, canonical (sorted keys, 2-space indent, trailing newline).
std::string report_json(const CampaignReport& report);
/// Markdown summary mirroring the JSON report.
std::string report_markdown(const CampaignReport& report);

/// Result rows as JSON Lines, replayable into build_matrix.
std::string results_jsonl(const std::vector<ExecutionResult>& results);
std::vector<ExecutionResult> load_results_jsonl(const std::string& path);

struct ComparisonCell {
    CrashStrategy strategy = CrashStrategy::Discard;
    std::size_t batch_size = 0;
    double mean_executed = 0.0;
    double mean_coverage = 0.0;      // fraction of the queue, [0, 1]
    double mean_logical_ticks = 0.0; // executed + rebuild penalty ticks
};

struct ComparisonTable {
    std::vector<ComparisonCell> cells;  // strategy-major, batch-size order
    std::size_t runs = 0;
    std::size_t queue_length = 0;
};

/// Sweeps both strategies over `batch_sizes`, `runs` seeded repetitions
/// each. Crash decisions are keyed on (device, test, run) only, so the
/// two strategies face identical crash traces in every paired run. Runs
/// on bare cursors with counting sinks; no results are retained.
ComparisonTable compare_strategies(const CampaignConfig& config,
                                   const std::vector<std::size_t>& batch_sizes,
                                   std::size_t runs);

std::string comparison_markdown(const ComparisonTable& table);

}  // namespace compatlab
