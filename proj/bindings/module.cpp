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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include <json.hpp>

#include "compatlab/analyzer.hpp"
#include "compatlab/bundler.hpp"
#include "compatlab/campaign.hpp"
#include "compatlab/client_sim.hpp"
#include "compatlab/error.hpp"
#include "compatlab/json_io.hpp"
#include "compatlab/registry.hpp"
#include "compatlab/scheduler.hpp"

namespace py = pybind11;

namespace {

compatlab::TestBundle bundle_from_json(const std::string& text) {
    return nlohmann::json::parse(text).get<compatlab::TestBundle>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Crowdsourced compatibility-testing campaign simulator";
    m.attr("__version__") = "0.1.0";

    py::register_exception<compatlab::Error>(m, "CompatlabError",
                                             PyExc_ValueError);

    py::class_<compatlab::CampaignConfig>(m, "CampaignConfig")
        .def(py::init<>())
        .def_readwrite("fleet_path", &compatlab::CampaignConfig::fleet_path)
        .def_readwrite("tests_path", &compatlab::CampaignConfig::tests_path)
        .def_readwrite("oracle_path",
                       &compatlab::CampaignConfig::oracle_path)
        .def_readwrite("trace_path", &compatlab::CampaignConfig::trace_path)
        .def_readwrite("out_dir", &compatlab::CampaignConfig::out_dir)
        .def_readwrite("taxonomy_path",
                       &compatlab::CampaignConfig::taxonomy_path)
        .def_readwrite("survey_path",
                       &compatlab::CampaignConfig::survey_path)
        .def_readwrite("batch_size", &compatlab::CampaignConfig::batch_size)
        .def_readwrite("redundancy", &compatlab::CampaignConfig::redundancy)
        .def_readwrite("seed", &compatlab::CampaignConfig::seed)
        .def_readwrite("crash_prob", &compatlab::CampaignConfig::crash_prob)
        .def_readwrite("crash_every",
                       &compatlab::CampaignConfig::crash_every)
        .def_readwrite("rebuild_penalty",
                       &compatlab::CampaignConfig::rebuild_penalty)
        .def_property(
            "strategy",
            [](const compatlab::CampaignConfig& c) {
                return to_string(c.strategy);
            },
            [](compatlab::CampaignConfig& c, const std::string& name) {
                c.strategy = compatlab::strategy_from_string(name);
            });

    py::class_<compatlab::CampaignReport>(m, "CampaignReport")
        .def_property_readonly("executed",
                               [](const compatlab::CampaignReport& r) {
                                   return r.totals.executed;
                               })
        .def_property_readonly("skipped",
                               [](const compatlab::CampaignReport& r) {
                                   return r.totals.skipped;
                               })
        .def_property_readonly("queue_length",
                               [](const compatlab::CampaignReport& r) {
                                   return r.totals.queue_length;
                               })
        .def_property_readonly("coverage",
                               [](const compatlab::CampaignReport& r) {
                                   return r.totals.fraction;
                               })
        .def_property_readonly("logical_ticks",
                               [](const compatlab::CampaignReport& r) {
                                   return r.logical_ticks;
                               })
        .def_property_readonly("device_count",
                               [](const compatlab::CampaignReport& r) {
                                   return r.devices.size();
                               })
        .def_property_readonly("issue_count",
                               [](const compatlab::CampaignReport& r) {
                                   return r.issues.size();
                               })
        .def("to_json", &compatlab::report_json)
        .def("to_markdown", &compatlab::report_markdown);

    m.def("run_campaign", &compatlab::run_campaign, py::arg("config"),
          py::call_guard<py::gil_scoped_release>(),
          "Run a full campaign; returns the aggregated report.");

    py::class_<compatlab::ComparisonCell>(m, "ComparisonCell")
        .def_property_readonly("strategy",
                               [](const compatlab::ComparisonCell& c) {
                                   return to_string(c.strategy);
                               })
        .def_readonly("batch_size", &compatlab::ComparisonCell::batch_size)
        .def_readonly("mean_executed",
                      &compatlab::ComparisonCell::mean_executed)
        .def_readonly("mean_coverage",
                      &compatlab::ComparisonCell::mean_coverage)
        .def_readonly("mean_logical_ticks",
                      &compatlab::ComparisonCell::mean_logical_ticks);

    py::class_<compatlab::ComparisonTable>(m, "ComparisonTable")
        .def_readonly("cells", &compatlab::ComparisonTable::cells)
        .def_readonly("runs", &compatlab::ComparisonTable::runs)
        .def_readonly("queue_length",
                      &compatlab::ComparisonTable::queue_length)
        .def("to_markdown", &compatlab::comparison_markdown);

    m.def("compare_strategies", &compatlab::compare_strategies,
          py::arg("config"),
          py::arg("batch_sizes") = std::vector<std::size_t>{100, 500, 1000},
          py::arg("runs") = std::size_t{50},
          py::call_guard<py::gil_scoped_release>(),
          "Sweep both crash strategies over batch sizes with paired "
          "crash traces.");

    m.def(
        "is_suitable_time",
        [](bool screen_on, bool idle_mode, double memory_usage,
           double battery_level, bool charging, double memory_threshold,
           double battery_threshold) {
            compatlab::DeviceState state;
            state.screen_on = screen_on;
            state.idle_mode = idle_mode;
            state.memory_usage = memory_usage;
            state.battery_level = battery_level;
            state.charging = charging;
            compatlab::SuitabilityThresholds thresholds;
            thresholds.memory = memory_threshold;
            thresholds.battery = battery_threshold;
            return compatlab::is_suitable_time(state, thresholds);
        },
        py::arg("screen_on"), py::arg("idle_mode"), py::arg("memory_usage"),
        py::arg("battery_level"), py::arg("charging"),
        py::arg("memory_threshold") = 0.25,
        py::arg("battery_threshold") = 0.60,
        "True when the device may run tests unnoticed: screen off, idle, "
        "memory below threshold, charging above the battery floor.");

    m.def(
        "survey_scores",
        [](const std::string& path) {
            const compatlab::SurveyScores scores =
                compatlab::survey_scores(compatlab::load_survey(path));
            py::dict out;
            out["ces"] = scores.ces;
            out["css"] = scores.css;
            out["nps"] = scores.nps;
            return out;
        },
        py::arg("path"),
        "Score a survey response file: per-question CES/CSS and the NPS.");

    m.def(
        "diff_bundles",
        [](const std::string& base_json, const std::string& target_json) {
            const compatlab::BundlePatch patch = compatlab::diff(
                bundle_from_json(base_json), bundle_from_json(target_json));
            return nlohmann::json(patch).dump();
        },
        py::arg("base"), py::arg("target"),
        "Diff two consecutive bundle versions; returns the patch as JSON.");

    m.def(
        "apply_patch",
        [](const std::string& base_json, const std::string& patch_json) {
            const compatlab::TestBundle next = compatlab::apply_patch(
                bundle_from_json(base_json),
                nlohmann::json::parse(patch_json)
                    .get<compatlab::BundlePatch>());
            return nlohmann::json(next).dump();
        },
        py::arg("base"), py::arg("patch"),
        "Apply a patch to a bundle; returns the checksum-verified result.");

    m.def(
        "analyze_results",
        [](const std::string& results_path, const std::string& fleet_path,
           const std::string& taxonomy_path) {
            // Re-registering the fleet in file order reproduces the device
            // ids a campaign over the same fleet assigned.
            compatlab::DeviceRegistry registry;
            {
                std::ifstream in(fleet_path);
                if (!in) {
                    throw compatlab::ParseError("cannot open fleet file '" +
                                                fleet_path + "'");
                }
                std::string line;
                while (std::getline(in, line)) {
                    if (line.find_first_not_of(" \t\r") == std::string::npos)
                        continue;
                    registry.register_device(
                        nlohmann::json::parse(line)
                            .get<compatlab::DeviceProfile>());
                }
            }
            const compatlab::ErrorTaxonomy taxonomy =
                taxonomy_path.empty()
                    ? compatlab::ErrorTaxonomy::defaults()
                    : compatlab::ErrorTaxonomy::from_file(taxonomy_path);
            const compatlab::ResultMatrix matrix = compatlab::build_matrix(
                compatlab::load_results_jsonl(results_path), registry);
            nlohmann::json issues = nlohmann::json::array();
            for (const compatlab::CompatibilityIssue& issue :
                 compatlab::detect_issues(matrix, taxonomy)) {
                issues.push_back(
                    nlohmann::json{{"target_api", issue.target_api},
                                   {"kind", to_string(issue.kind)},
                                   {"scope", to_string(issue.scope)},
                                   {"evidence", issue.evidence}});
            }
            return issues.dump();
        },
        py::arg("results_path"), py::arg("fleet_path"),
        py::arg("taxonomy_path") = std::string{},
        "Replay a results.jsonl file through the analyzer; returns the "
        "issue list as JSON.");
}
