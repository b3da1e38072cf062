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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "compatlab/campaign.hpp"
#include "compatlab/error.hpp"
#include "helpers.hpp"

using namespace compatlab;

namespace {

CampaignConfig case_study_config() {
    CampaignConfig config;
    config.fleet_path = testutil::data_path("fleet.jsonl");
    config.tests_path = testutil::data_path("tests_case_studies.jsonl");
    return config;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

}  // namespace

TEST_CASE("campaign configs are validated up front") {
    CampaignConfig config = case_study_config();
    CHECK_NOTHROW(config.validate());

    SUBCASE("fleet path required") {
        config.fleet_path.clear();
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
    SUBCASE("tests path required") {
        config.tests_path.clear();
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
    SUBCASE("batch size positive") {
        config.batch_size = 0;
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
    SUBCASE("redundancy positive") {
        config.redundancy = 0;
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
    SUBCASE("memory threshold inside the open interval") {
        config.thresholds.memory = 0.0;
        CHECK_THROWS_AS(config.validate(), ConfigError);
        config.thresholds.memory = 1.0;
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
    SUBCASE("battery threshold inside the open interval") {
        config.thresholds.battery = 1.0;
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
    SUBCASE("crash probability is a probability") {
        config.crash_prob = 1.5;
        CHECK_THROWS_AS(config.validate(), ConfigError);
        config.crash_prob = -0.1;
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
    SUBCASE("crash knobs are mutually exclusive") {
        config.crash_prob = 0.1;
        config.crash_every = 5;
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
    SUBCASE("rebuild penalty nonnegative") {
        config.rebuild_penalty = -1;
        CHECK_THROWS_AS(config.validate(), ConfigError);
    }
}

TEST_CASE("a calm campaign covers every queue completely") {
    const CampaignConfig config = case_study_config();
    const CampaignReport report = run_campaign(config);

    // Eleven distinct profiles, so eleven singleton clusters with queues
    // of all five tests each.
    REQUIRE(report.devices.size() == 11);
    CHECK(report.devices.contains("dev-000001"));
    CHECK(report.devices.contains("dev-000011"));
    for (const auto& [id, device] : report.devices) {
        CAPTURE(id);
        CHECK(device.coverage.queue_length == 5);
        CHECK(device.coverage.executed == 5);
        CHECK(device.coverage.skipped == 0);
        CHECK(device.coverage.fraction == doctest::Approx(1.0));
        CHECK(device.rebuilt == 0);
        CHECK(device.final_tick == 5);  // one tick per executed test
        CHECK(device.completed);
    }
    CHECK(report.totals.executed == 55);
    CHECK(report.totals.skipped == 0);
    CHECK(report.totals.queue_length == 55);
    CHECK(report.totals.fraction == doctest::Approx(1.0));
    CHECK(report.logical_ticks == 5);
    CHECK(report.issues.empty());  // no oracle: everything passes
    CHECK(report.flaky.empty());
    CHECK(report.rejected_results == 0);
    CHECK_FALSE(report.survey.has_value());
    CHECK(report.results.size() == 55);
}

TEST_CASE("campaign reports are byte-for-byte deterministic") {
    CampaignConfig config = case_study_config();
    config.oracle_path = testutil::data_path("oracle_case_studies.jsonl");
    config.strategy = CrashStrategy::Rebuild;
    config.batch_size = 2;
    config.crash_prob = 0.3;
    config.seed = 11;

    const std::string first = report_json(run_campaign(config));
    const std::string second = report_json(run_campaign(config));
    CHECK(first == second);

    config.seed = 12;  // a different seed reshuffles the crash set
    const CampaignReport reseeded = run_campaign(config);
    CHECK(report_json(reseeded) != first);
}

TEST_CASE("the report agrees with a recount of the persisted results") {
    testutil::TempDir out;
    CampaignConfig config = case_study_config();
    config.strategy = CrashStrategy::Discard;
    config.batch_size = 2;
    config.crash_every = 3;
    config.out_dir = out.path();
    const CampaignReport report = run_campaign(config);

    const auto rows = load_results_jsonl(out.path() + "/results.jsonl");
    REQUIRE_FALSE(rows.empty());
    std::map<DeviceId, std::pair<std::size_t, std::size_t>> recount;
    for (const ExecutionResult& row : rows) {
        if (row.outcome == OutcomeKind::SkippedCrash) {
            recount[row.device].second++;
        } else {
            recount[row.device].first++;
        }
    }
    REQUIRE(recount.size() == report.devices.size());
    std::size_t executed_total = 0;
    std::size_t skipped_total = 0;
    for (const auto& [id, device] : report.devices) {
        CAPTURE(id);
        CHECK(recount.at(id).first == device.coverage.executed);
        CHECK(recount.at(id).second == device.coverage.skipped);
        executed_total += recount.at(id).first;
        skipped_total += recount.at(id).second;
    }
    CHECK(executed_total == report.totals.executed);
    CHECK(skipped_total == report.totals.skipped);

    // Every third executed test crashes: with five-test queues in pairs,
    // each device runs four tests and loses one to the discarded batch.
    for (const auto& [id, device] : report.devices) {
        CAPTURE(id);
        CHECK(device.coverage.executed == 4);
        CHECK(device.coverage.skipped == 1);
        CHECK(device.coverage.fraction == doctest::Approx(0.8));
        CHECK(device.final_tick == 4);
    }
    CHECK(report.logical_ticks == 4);
}

TEST_CASE("rebuilding after crashes recovers the queue at a tick cost") {
    CampaignConfig config = case_study_config();
    config.strategy = CrashStrategy::Rebuild;
    config.batch_size = 2;
    config.crash_every = 3;
    config.rebuild_penalty = 2;
    const CampaignReport report = run_campaign(config);

    for (const auto& [id, device] : report.devices) {
        CAPTURE(id);
        CHECK(device.coverage.executed == 5);
        CHECK(device.coverage.skipped == 0);
        CHECK(device.coverage.fraction == doctest::Approx(1.0));
        CHECK(device.rebuilt == 1);
        // Five execution ticks plus the penalty for one rebuilt test.
        CHECK(device.final_tick == 7);
        CHECK(device.completed);
    }
    CHECK(report.totals.fraction == doctest::Approx(1.0));
    CHECK(report.logical_ticks == 7);
    const auto rows = report.results;
    const auto crashed =
        std::count_if(rows.begin(), rows.end(), [](const ExecutionResult& r) {
            return r.outcome == OutcomeKind::Crashed;
        });
    CHECK(crashed == 11);  // exactly one crash per device
}

TEST_CASE("the case studies produce the four documented issues") {
    CampaignConfig config = case_study_config();
    config.oracle_path = testutil::data_path("oracle_case_studies.jsonl");
    const CampaignReport report = run_campaign(config);

    CHECK(report.totals.fraction == doctest::Approx(1.0));
    CHECK(report.flaky.empty());
    REQUIRE(report.issues.size() == 4);
    std::map<std::string, std::pair<IssueKind, IssueScope>> got;
    for (const CompatibilityIssue& issue : report.issues) {
        got.emplace(issue.target_api, std::pair{issue.kind, issue.scope});
    }
    CHECK(got.at("android.security.keystore.KeyGenParameterSpec.Builder#"
                 "setUnlockedDeviceRequired") ==
          std::pair{IssueKind::Signature, IssueScope::VersionSpecific});
    CHECK(got.at("android.util.LongSparseArray#valueAt") ==
          std::pair{IssueKind::Semantics, IssueScope::VersionSpecific});
    CHECK(got.at("android.animation.ValueAnimator#setFrameDelay") ==
          std::pair{IssueKind::Semantics, IssueScope::VendorSpecific});
    CHECK(got.at("android.telephony.TelephonyManager#getImei") ==
          std::pair{IssueKind::Semantics, IssueScope::ModelSpecific});
    // The well-behaved API never shows up.
    CHECK_FALSE(got.contains(
        "android.app.NotificationChannel#setDescription"));
}

TEST_CASE("survey scores ride along in the report") {
    CampaignConfig config = case_study_config();
    config.survey_path = testutil::data_path("survey.jsonl");
    const CampaignReport report = run_campaign(config);
    REQUIRE(report.survey.has_value());
    CHECK(report.survey->nps == 84);
    CHECK(report.survey->ces.at(1) == 92);
    CHECK(report.survey->css.at(5) == 100);

    const auto j = nlohmann::json::parse(report_json(report));
    CHECK(j.at("survey").at("nps") == 84);
    CHECK(j.at("survey").at("ces").at("2") == 92);
}

TEST_CASE("reports and results land in the output directory") {
    testutil::TempDir out;
    CampaignConfig config = case_study_config();
    config.oracle_path = testutil::data_path("oracle_case_studies.jsonl");
    config.out_dir = out.path();
    const CampaignReport report = run_campaign(config);

    const std::filesystem::path dir(out.path());
    REQUIRE(std::filesystem::exists(dir / "report.json"));
    REQUIRE(std::filesystem::exists(dir / "report.md"));
    REQUIRE(std::filesystem::exists(dir / "results.jsonl"));
    CHECK(slurp((dir / "report.json").string()) == report_json(report));
    CHECK(slurp((dir / "report.md").string()) == report_markdown(report));
    CHECK(load_results_jsonl((dir / "results.jsonl").string()) ==
          report.results);

    const auto j = nlohmann::json::parse(slurp((dir / "report.json").string()));
    CHECK(j.at("campaign").at("fleet_size") == 11);
    CHECK(j.at("issues").size() == 4);
    CHECK(j.at("totals").at("executed") == 55);

    const std::string md = report_markdown(report);
    CHECK(md.find("## Coverage") != std::string::npos);
    CHECK(md.find("## Compatibility issues") != std::string::npos);
    CHECK(md.find("100.0%") != std::string::npos);
}

TEST_CASE("result rows survive the jsonl round trip") {
    std::vector<ExecutionResult> rows;
    ExecutionResult row;
    row.test_id = "tc-0001";
    row.target_api = "a.B#m";
    row.device = "dev-000001";
    row.outcome = OutcomeKind::Pass;
    row.batch_index = 0;
    row.timestamp = 3;
    rows.push_back(row);
    row.test_id = "tc-0002";
    row.outcome = OutcomeKind::Fail;
    row.error_kind = "SecurityException";
    row.message = "quote \" and newline \n and tab \t";
    row.failed_phase = "setUp";
    rows.push_back(row);
    row.test_id = "tc-0003";
    row.outcome = OutcomeKind::Crashed;
    row.error_kind = "Crash";
    rows.push_back(row);
    row.test_id = "tc-0004";
    row.outcome = OutcomeKind::SkippedCrash;
    row.error_kind.clear();
    row.message.clear();
    row.failed_phase.clear();
    rows.push_back(row);

    const testutil::TempFile file(results_jsonl(rows));
    CHECK(load_results_jsonl(file.path()) == rows);
}

TEST_CASE("a calm strategy sweep covers everything in every cell") {
    const CampaignConfig config = case_study_config();
    const ComparisonTable table = compare_strategies(config, {2, 5}, 2);
    CHECK(table.runs == 2);
    CHECK(table.queue_length == 5);
    REQUIRE(table.cells.size() == 4);
    // Strategy-major, batch sizes in the given order.
    CHECK(table.cells[0].strategy == CrashStrategy::Discard);
    CHECK(table.cells[0].batch_size == 2);
    CHECK(table.cells[1].strategy == CrashStrategy::Discard);
    CHECK(table.cells[1].batch_size == 5);
    CHECK(table.cells[2].strategy == CrashStrategy::Rebuild);
    CHECK(table.cells[2].batch_size == 2);
    CHECK(table.cells[3].strategy == CrashStrategy::Rebuild);
    CHECK(table.cells[3].batch_size == 5);
    for (const ComparisonCell& cell : table.cells) {
        CHECK(cell.mean_executed == doctest::Approx(5.0));
        CHECK(cell.mean_coverage == doctest::Approx(1.0));
        CHECK(cell.mean_logical_ticks == doctest::Approx(5.0));
    }
    const std::string md = comparison_markdown(table);
    CHECK(md.find("DISCARD") != std::string::npos);
    CHECK(md.find("REBUILD") != std::string::npos);
    CHECK(md.find("100.0%") != std::string::npos);
}

TEST_CASE("under crashes, rebuild keeps coverage and discard pays in work") {
    CampaignConfig config = case_study_config();
    config.crash_prob = 0.15;
    config.seed = 9;
    const ComparisonTable table = compare_strategies(config, {2, 10}, 4);
    REQUIRE(table.cells.size() == 4);
    const ComparisonCell& discard_small = table.cells[0];
    const ComparisonCell& discard_large = table.cells[1];
    const ComparisonCell& rebuild_small = table.cells[2];
    const ComparisonCell& rebuild_large = table.cells[3];

    // Rebuild never loses a test, whatever the batch size.
    CHECK(rebuild_small.mean_coverage == doctest::Approx(1.0));
    CHECK(rebuild_large.mean_coverage == doctest::Approx(1.0));
    CHECK(rebuild_small.mean_executed == doctest::Approx(5.0));

    // Discard loses the tail of every crashed batch; the finer batching
    // can only lose less because its boundaries refine the coarse ones.
    CHECK(discard_small.mean_coverage <= rebuild_small.mean_coverage);
    CHECK(discard_large.mean_coverage <= discard_small.mean_coverage);
    CHECK(discard_large.mean_coverage < 1.0);

    // Rebuild pays for its coverage with extra scheduled ticks.
    CHECK(rebuild_small.mean_logical_ticks >=
          discard_small.mean_logical_ticks);
}

TEST_CASE("broken inputs are reported with their source") {
    SUBCASE("missing fleet file") {
        CampaignConfig config = case_study_config();
        config.fleet_path = "/nonexistent/fleet.jsonl";
        CHECK_THROWS_AS(run_campaign(config), ParseError);
    }
    SUBCASE("empty fleet file") {
        const testutil::TempFile empty("\n\n");
        CampaignConfig config = case_study_config();
        config.fleet_path = empty.path();
        CHECK_THROWS_AS(run_campaign(config), ValidationError);
    }
    SUBCASE("garbled fleet line is located") {
        const testutil::TempFile bad(
            R"({"brand": "Acme", "model": "M1", "api_level": 28, )"
            R"("soc": "s", "language": "en-US", "screen_w": 1, )"
            R"("screen_h": 1})"
            "\nnot json\n");
        CampaignConfig config = case_study_config();
        config.fleet_path = bad.path();
        try {
            run_campaign(config);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("strategy sweeps need batch sizes and runs") {
        const CampaignConfig config = case_study_config();
        CHECK_THROWS_AS(compare_strategies(config, {}, 3), ConfigError);
        CHECK_THROWS_AS(compare_strategies(config, {100}, 0), ConfigError);
    }
}
