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

#include "compatlab/campaign.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "compatlab/error.hpp"
#include "compatlab/hash.hpp"
#include "compatlab/json_io.hpp"
#include "compatlab/testbank.hpp"
#include "compatlab/transport.hpp"

namespace compatlab {

void CampaignConfig::validate() const {
    if (fleet_path.empty()) throw ConfigError("fleet path is required");
    if (tests_path.empty()) throw ConfigError("tests path is required");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (redundancy < 1) throw ConfigError("redundancy must be >= 1");
    if (thresholds.memory <= 0.0 || thresholds.memory >= 1.0) {
        throw ConfigError("memory threshold must be in (0, 1)");
    }
    if (thresholds.battery <= 0.0 || thresholds.battery >= 1.0) {
        throw ConfigError("battery threshold must be in (0, 1)");
    }
    if (crash_prob < 0.0 || crash_prob > 1.0) {
        throw ConfigError("crash_prob must be in [0, 1]");
    }
    if (crash_prob > 0.0 && crash_every > 0) {
        throw ConfigError("crash_prob and crash_every are mutually exclusive");
    }
    if (rebuild_penalty < 0) {
        throw ConfigError("rebuild_penalty must be >= 0");
    }
}

namespace {

std::vector<DeviceProfile> load_fleet(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open fleet file '" + path + "'");
    }
    std::vector<DeviceProfile> fleet;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fleet.push_back(nlohmann::json::parse(line).get<DeviceProfile>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": " + e.what());
        } catch (const ValidationError& e) {
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": " + e.what());
        }
    }
    if (fleet.empty()) {
        throw ValidationError("fleet file '" + path + "' has no devices");
    }
    return fleet;
}

CrashPredicate crash_predicate_for(const CampaignConfig& config) {
    if (config.crash_every > 0) {
        return crash_every_nth(config.crash_every);
    }
    return seeded_crashes(config.crash_prob, config.seed);
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    out << content;
}

}  // namespace

CampaignReport run_campaign(const CampaignConfig& config) {
    config.validate();
    const std::vector<DeviceProfile> fleet = load_fleet(config.fleet_path);
    const TestBank bank = TestBank::from_file(config.tests_path);
    const OutcomeOracle oracle = config.oracle_path.empty()
                                     ? OutcomeOracle{}
                                     : OutcomeOracle::from_file(
                                           config.oracle_path);
    const StateTrace trace = config.trace_path.empty()
                                 ? StateTrace::always_idle()
                                 : StateTrace::from_file(config.trace_path);
    const ErrorTaxonomy taxonomy =
        config.taxonomy_path.empty()
            ? ErrorTaxonomy::defaults()
            : ErrorTaxonomy::from_file(config.taxonomy_path);

    ServiceConfig service_config;
    service_config.strategy = config.strategy;
    service_config.batch_size = config.batch_size;
    service_config.redundancy = config.redundancy;
    service_config.retain_results = true;
    DispatchService service(bank, service_config);

    // Registration happens in fleet-file order so device ids, and with
    // them all seeded per-device randomness, are reproducible.
    std::vector<std::pair<DeviceId, DeviceProfile>> devices;
    {
        InProcessChannel channel(service);
        for (const DeviceProfile& profile : fleet) {
            devices.emplace_back(register_over_channel(channel, profile),
                                 profile);
        }
    }
    service.freeze();

    const CrashPredicate crash = crash_predicate_for(config);
    std::vector<SessionLog> logs(devices.size());
    {
        std::vector<std::thread> sessions;
        sessions.reserve(devices.size());
        for (std::size_t i = 0; i < devices.size(); ++i) {
            sessions.emplace_back([&, i] {
                InProcessChannel channel(service);
                SessionOptions options;
                options.thresholds = config.thresholds;
                options.rebuild_penalty = config.rebuild_penalty;
                options.crash = crash;
                logs[i] = run_device(devices[i].first, devices[i].second,
                                     channel, oracle, trace, options);
            });
        }
        for (std::thread& session : sessions) {
            session.join();
        }
    }

    CampaignReport report;
    report.config = config;
    report.results = service.results().sorted_results();

    const auto coverage_by_device = service.coverage();
    const auto rebuilt_by_device = service.rebuilt_counts();
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const DeviceId& id = devices[i].first;
        DeviceReport device_report;
        device_report.profile = devices[i].second;
        device_report.coverage = coverage_by_device.at(id);
        device_report.rebuilt = rebuilt_by_device.at(id);
        device_report.final_tick = logs[i].final_tick;
        device_report.completed = logs[i].completed;
        report.devices.emplace(id, device_report);
        report.totals.executed += device_report.coverage.executed;
        report.totals.skipped += device_report.coverage.skipped;
        report.totals.queue_length += device_report.coverage.queue_length;
        report.logical_ticks =
            std::max(report.logical_ticks, logs[i].final_tick);
    }
    report.totals.fraction =
        report.totals.queue_length == 0
            ? 1.0
            : static_cast<double>(report.totals.executed) /
                  static_cast<double>(report.totals.queue_length);

    const ResultMatrix matrix =
        build_matrix(report.results, service.registry());
    report.issues = detect_issues(matrix, taxonomy);
    report.flaky = matrix.flaky;
    report.rejected_results = matrix.rejected.size();
    if (!config.survey_path.empty()) {
        report.survey = survey_scores(load_survey(config.survey_path));
    }

    if (!config.out_dir.empty()) {
        const std::filesystem::path out_dir(config.out_dir);
        std::filesystem::create_directories(out_dir);
        write_text_file(out_dir / "report.json", report_json(report));
        write_text_file(out_dir / "report.md", report_markdown(report));
        write_text_file(out_dir / "results.jsonl",
                        results_jsonl(report.results));
    }
    return report;
}

namespace {

nlohmann::json coverage_json(const CoverageStats& stats) {
    return nlohmann::json{{"executed", stats.executed},
                          {"skipped", stats.skipped},
                          {"queue_length", stats.queue_length},
                          {"fraction", stats.fraction}};
}

nlohmann::json survey_json(const SurveyScores& scores) {
    nlohmann::json ces = nlohmann::json::object();
    for (const auto& [question, score] : scores.ces) {
        ces[std::to_string(question)] = score;
    }
    nlohmann::json css = nlohmann::json::object();
    for (const auto& [question, score] : scores.css) {
        css[std::to_string(question)] = score;
    }
    return nlohmann::json{
        {"ces", ces}, {"css", css}, {"nps", scores.nps}};
}

}  // namespace

std::string report_json(const CampaignReport& report) {
    nlohmann::json j;
    j["campaign"] = nlohmann::json{
        {"batch_size", report.config.batch_size},
        {"strategy", to_string(report.config.strategy)},
        {"redundancy", report.config.redundancy},
        {"seed", report.config.seed},
        {"crash_prob", report.config.crash_prob},
        {"crash_every", report.config.crash_every},
        {"rebuild_penalty", report.config.rebuild_penalty},
        {"thresholds",
         {{"memory", report.config.thresholds.memory},
          {"battery", report.config.thresholds.battery}}},
        {"fleet_size", report.devices.size()}};
    nlohmann::json coverage = nlohmann::json::object();
    for (const auto& [id, device] : report.devices) {
        nlohmann::json entry = coverage_json(device.coverage);
        entry["rebuilt"] = device.rebuilt;
        entry["final_tick"] = device.final_tick;
        entry["completed"] = device.completed;
        entry["profile"] = device.profile;
        coverage[id] = entry;
    }
    j["coverage"] = coverage;
    nlohmann::json totals = coverage_json(report.totals);
    totals["logical_ticks"] = report.logical_ticks;
    j["totals"] = totals;
    nlohmann::json issues = nlohmann::json::array();
    for (const CompatibilityIssue& issue : report.issues) {
        issues.push_back(nlohmann::json{{"target_api", issue.target_api},
                                        {"kind", to_string(issue.kind)},
                                        {"scope", to_string(issue.scope)},
                                        {"evidence", issue.evidence}});
    }
    j["issues"] = issues;
    nlohmann::json flaky = nlohmann::json::array();
    for (const FlakyRecord& record : report.flaky) {
        flaky.push_back(nlohmann::json{{"target_api", record.target_api},
                                       {"device", record.device},
                                       {"observed", record.observed}});
    }
    j["flaky"] = flaky;
    j["rejected_results"] = report.rejected_results;
    if (report.survey) {
        j["survey"] = survey_json(*report.survey);
    }
    return j.dump(2) + "\n";
}

namespace {

std::string percent(double fraction) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.1f%%", fraction * 100.0);
    return buffer;
}

}  // namespace

std::string report_markdown(const CampaignReport& report) {
    std::ostringstream md;
    md << "# Campaign report\n\n";
    md << "## Configuration\n\n";
    md << "| Setting | Value |\n|---|---|\n";
    md << "| Strategy | " << to_string(report.config.strategy) << " |\n";
    md << "| Batch size | " << report.config.batch_size << " |\n";
    md << "| Redundancy | " << report.config.redundancy << " |\n";
    md << "| Seed | " << report.config.seed << " |\n";
    md << "| Crash probability | " << report.config.crash_prob << " |\n";
    md << "| Crash every | " << report.config.crash_every << " |\n";
    md << "| Rebuild penalty | " << report.config.rebuild_penalty << " |\n";
    md << "| Memory threshold | " << report.config.thresholds.memory
       << " |\n";
    md << "| Battery threshold | " << report.config.thresholds.battery
       << " |\n\n";
    md << "## Coverage\n\n";
    md << "| Device | Brand | Model | API | Executed | Skipped | Queue | "
          "Coverage | Rebuilt | Final tick |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& [id, device] : report.devices) {
        md << "| " << id << " | " << device.profile.brand << " | "
           << device.profile.model << " | " << device.profile.api_level
           << " | " << device.coverage.executed << " | "
           << device.coverage.skipped << " | "
           << device.coverage.queue_length << " | "
           << percent(device.coverage.fraction) << " | " << device.rebuilt
           << " | " << device.final_tick << " |\n";
    }
    md << "\nTotals: " << report.totals.executed << " of "
       << report.totals.queue_length << " tests executed ("
       << percent(report.totals.fraction) << "), " << report.totals.skipped
       << " skipped, fleet makespan " << report.logical_ticks
       << " ticks.\n\n";
    md << "## Compatibility issues\n\n";
    if (report.issues.empty()) {
        md << "None detected.\n\n";
    } else {
        md << "| Target API | Kind | Scope | Evidence |\n|---|---|---|---|\n";
        for (const CompatibilityIssue& issue : report.issues) {
            md << "| " << issue.target_api << " | " << to_string(issue.kind)
               << " | " << to_string(issue.scope) << " | ";
            bool first = true;
            for (const auto& [label, ids] : issue.evidence) {
                if (!first) md << "; ";
                first = false;
                md << label << ": ";
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (i) md << ", ";
                    md << ids[i];
                }
            }
            md << " |\n";
        }
        md << "\n";
    }
    md << "## Flaky results\n\n";
    if (report.flaky.empty()) {
        md << "None.\n";
    } else {
        md << "| Target API | Device | Observed |\n|---|---|---|\n";
        for (const FlakyRecord& record : report.flaky) {
            md << "| " << record.target_api << " | " << record.device
               << " | ";
            for (std::size_t i = 0; i < record.observed.size(); ++i) {
                if (i) md << ", ";
                md << record.observed[i];
            }
            md << " |\n";
        }
    }
    if (report.rejected_results > 0) {
        md << "\nRejected results from unregistered devices: "
           << report.rejected_results << "\n";
    }
    if (report.survey) {
        md << "\n## Survey scores\n\n";
        md << "| Question | Effort | Satisfaction |\n|---|---|---|\n";
        for (const auto& [question, score] : report.survey->ces) {
            md << "| " << question << " | " << score << " | "
               << report.survey->css.at(question) << " |\n";
        }
        md << "\nNet promoter score: " << report.survey->nps << "\n";
    }
    return md.str();
}

std::string results_jsonl(const std::vector<ExecutionResult>& results) {
    std::string out;
    for (const ExecutionResult& result : results) {
        out += nlohmann::json(result).dump();
        out += '\n';
    }
    return out;
}

std::vector<ExecutionResult> load_results_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open results file '" + path + "'");
    }
    std::vector<ExecutionResult> results;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            results.push_back(
                nlohmann::json::parse(line).get<ExecutionResult>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": " + e.what());
        }
    }
    return results;
}

ComparisonTable compare_strategies(const CampaignConfig& config,
                                   const std::vector<std::size_t>& batch_sizes,
                                   std::size_t runs) {
    config.validate();
    if (batch_sizes.empty()) {
        throw ConfigError("at least one batch size is required");
    }
    if (runs == 0) {
        throw ConfigError("runs must be >= 1");
    }
    const std::vector<DeviceProfile> fleet = load_fleet(config.fleet_path);
    const TestBank bank = TestBank::from_file(config.tests_path);

    DeviceRegistry registry;
    std::vector<DeviceId> device_ids;
    device_ids.reserve(fleet.size());
    for (const DeviceProfile& profile : fleet) {
        device_ids.push_back(registry.register_device(profile));
    }
    const Assignment assignment =
        allocate(bank.ordered_ids(), registry.cluster_devices(),
                 config.redundancy);

    // One crash decision per (device, queue position, run): identical for
    // both strategies, so every run is a paired comparison.
    const auto crashes = [&](const DeviceId& device, const std::string& test,
                             std::size_t queue_index,
                             std::size_t run) -> bool {
        if (config.crash_every > 0) {
            return (queue_index + 1) % config.crash_every == 0;
        }
        if (config.crash_prob <= 0.0) return false;
        const std::string key = device + '\x1f' + test + '\x1f' +
                                std::to_string(run);
        return keyed_uniform(key, config.seed) < config.crash_prob;
    };

    ComparisonTable table;
    table.runs = runs;
    std::size_t queue_total = 0;
    for (const auto& [id, queue] : assignment.queues) {
        queue_total += queue.size();
    }
    table.queue_length =
        assignment.queues.empty() ? 0 : queue_total / assignment.queues.size();

    for (const CrashStrategy strategy :
         {CrashStrategy::Discard, CrashStrategy::Rebuild}) {
        for (const std::size_t batch_size : batch_sizes) {
            double executed_sum = 0.0;
            double coverage_sum = 0.0;
            double ticks_sum = 0.0;
            for (std::size_t run = 0; run < runs; ++run) {
                std::int64_t makespan = 0;
                for (const auto& [device, queue] : assignment.queues) {
                    DispatchCursor cursor(queue, strategy, batch_size);
                    std::optional<CrashReport> crash;
                    for (;;) {
                        const BatchOutcome outcome = cursor.next_batch(crash);
                        if (!outcome.batch) break;
                        crash.reset();
                        const Batch& batch = *outcome.batch;
                        for (std::size_t o = 0; o < batch.test_ids.size();
                             ++o) {
                            if (crashes(device, batch.test_ids[o],
                                        batch.queue_start + o, run)) {
                                crash = CrashReport{
                                    batch.index,
                                    static_cast<std::int64_t>(o)};
                                break;
                            }
                        }
                    }
                    executed_sum +=
                        static_cast<double>(cursor.executed_count());
                    coverage_sum += cursor.coverage().fraction;
                    const std::int64_t ticks =
                        static_cast<std::int64_t>(cursor.executed_count()) +
                        config.rebuild_penalty *
                            static_cast<std::int64_t>(cursor.rebuilt_count());
                    makespan = std::max(makespan, ticks);
                }
                ticks_sum += static_cast<double>(makespan);
            }
            const double device_runs =
                static_cast<double>(runs * assignment.queues.size());
            ComparisonCell cell;
            cell.strategy = strategy;
            cell.batch_size = batch_size;
            cell.mean_executed = executed_sum / device_runs;
            cell.mean_coverage = coverage_sum / device_runs;
            cell.mean_logical_ticks = ticks_sum / static_cast<double>(runs);
            table.cells.push_back(cell);
        }
    }
    return table;
}

std::string comparison_markdown(const ComparisonTable& table) {
    std::ostringstream md;
    md << "# Strategy comparison\n\n";
    md << table.runs << " runs per cell, mean queue length "
       << table.queue_length << ".\n\n";
    md << "| Strategy | Batch size | Mean executed | Coverage | Mean "
          "makespan (ticks) |\n";
    md << "|---|---|---|---|---|\n";
    for (const ComparisonCell& cell : table.cells) {
        char executed[32];
        std::snprintf(executed, sizeof(executed), "%.1f",
                      cell.mean_executed);
        char ticks[32];
        std::snprintf(ticks, sizeof(ticks), "%.1f", cell.mean_logical_ticks);
        md << "| " << to_string(cell.strategy) << " | " << cell.batch_size
           << " | " << executed << " | " << percent(cell.mean_coverage)
           << " | " << ticks << " |\n";
    }
    return md.str();
}

}  // namespace compatlab
