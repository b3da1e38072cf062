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

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "compatlab/campaign.hpp"
#include "compatlab/error.hpp"
#include "compatlab/scheduler.hpp"

namespace {

void add_common_options(CLI::App& cmd, compatlab::CampaignConfig& config,
                        std::string& strategy_name) {
    cmd.add_option("--fleet", config.fleet_path,
                   "Device fleet, JSON Lines of profiles")
        ->required();
    cmd.add_option("--tests", config.tests_path,
                   "Test bank, JSON Lines of test cases")
        ->required();
    cmd.add_option("--oracle", config.oracle_path,
                   "Outcome oracle rules, JSON Lines (default: all pass)");
    cmd.add_option("--batch-size", config.batch_size, "Tests per batch")
        ->capture_default_str();
    cmd.add_option("--strategy", strategy_name,
                   "Crash strategy: DISCARD or REBUILD")
        ->capture_default_str();
    cmd.add_option("--redundancy", config.redundancy,
                   "Devices per cluster assigned to each test")
        ->capture_default_str();
    cmd.add_option("--seed", config.seed, "Seed for all randomness")
        ->capture_default_str();
    cmd.add_option("--crash-prob", config.crash_prob,
                   "Per-test crash probability")
        ->capture_default_str();
    cmd.add_option("--trace", config.trace_path,
                   "Device state trace file (default: always idle)");
    cmd.add_option("--taxonomy", config.taxonomy_path,
                   "Error taxonomy file (default: built-in)");
    cmd.add_option("--rebuild-penalty", config.rebuild_penalty,
                   "Ticks added per re-dispatched test under REBUILD")
        ->capture_default_str();
}

int run_command(compatlab::CampaignConfig config) {
    const compatlab::CampaignReport report = compatlab::run_campaign(config);
    std::fputs(compatlab::report_markdown(report).c_str(), stdout);
    if (!config.out_dir.empty()) {
        std::printf("\nReport written to %s\n", config.out_dir.c_str());
    }
    return 0;
}

int compare_command(compatlab::CampaignConfig config,
                    const std::vector<std::size_t>& batch_sizes,
                    std::size_t runs) {
    const compatlab::ComparisonTable table =
        compatlab::compare_strategies(config, batch_sizes, runs);
    std::fputs(compatlab::comparison_markdown(table).c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compatlab: crowdsourced compatibility-testing campaigns"};
    app.require_subcommand(1);

    compatlab::CampaignConfig run_config;
    std::string run_strategy = to_string(run_config.strategy);
    CLI::App* run = app.add_subcommand(
        "run", "Run a full campaign and write a report");
    add_common_options(*run, run_config, run_strategy);
    run->add_option("--crash-every", run_config.crash_every,
                    "Deterministic crash at every n-th executed test");
    run->add_option("--survey", run_config.survey_path,
                    "Survey responses, JSON Lines; scores land in the report");
    run->add_option("--out", run_config.out_dir,
                    "Output directory for report.json, report.md, "
                    "results.jsonl");

    compatlab::CampaignConfig cmp_config;
    std::string cmp_strategy = to_string(cmp_config.strategy);
    std::vector<std::size_t> batch_sizes{100, 500, 1000};
    std::size_t runs = 50;
    CLI::App* compare = app.add_subcommand(
        "compare", "Sweep both crash strategies over batch sizes");
    add_common_options(*compare, cmp_config, cmp_strategy);
    compare
        ->add_option("--batch-sizes", batch_sizes,
                     "Batch sizes to sweep")
        ->delimiter(',')
        ->capture_default_str();
    compare->add_option("--runs", runs, "Seeded repetitions per cell")
        ->capture_default_str();
    compare->add_option("--crash-every", cmp_config.crash_every,
                        "Deterministic crash at every n-th queue position");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            run_config.strategy = compatlab::strategy_from_string(run_strategy);
            return run_command(std::move(run_config));
        }
        cmp_config.strategy = compatlab::strategy_from_string(cmp_strategy);
        return compare_command(std::move(cmp_config), batch_sizes, runs);
    } catch (const compatlab::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
