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

#include "compatlab/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "compatlab/error.hpp"
#include "compatlab/json_io.hpp"

namespace compatlab {

ErrorTaxonomy::ErrorTaxonomy()
    : signature_kinds_{"NoClassDefFoundError", "NoSuchMethodError",
                       "NoSuchFieldError"} {}

ErrorTaxonomy ErrorTaxonomy::defaults() { return ErrorTaxonomy{}; }

ErrorTaxonomy ErrorTaxonomy::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open taxonomy file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return from_json_text(text.str(), path);
}

ErrorTaxonomy ErrorTaxonomy::from_json_text(const std::string& text,
                                            const std::string& origin) {
    ErrorTaxonomy taxonomy;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        if (!j.is_object()) {
            throw ParseError(origin + ": taxonomy must be a JSON object");
        }
        if (j.contains("signature_kinds")) {
            for (const auto& kind : j.at("signature_kinds")) {
                taxonomy.add_signature_kind(kind.get<std::string>());
            }
        }
        if (j.contains("brand_aliases")) {
            for (const auto& [from, to] : j.at("brand_aliases").items()) {
                taxonomy.add_brand_alias(from, to.get<std::string>());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return taxonomy;
}

bool ErrorTaxonomy::is_signature(const std::string& error_kind) const {
    return signature_kinds_.contains(error_kind);
}

std::string ErrorTaxonomy::canonical_brand(const std::string& brand) const {
    const auto it = brand_aliases_.find(brand);
    return it == brand_aliases_.end() ? brand : it->second;
}

void ErrorTaxonomy::add_signature_kind(const std::string& kind) {
    if (kind.empty()) {
        throw ValidationError("signature kind must be nonempty");
    }
    signature_kinds_.insert(kind);
}

void ErrorTaxonomy::add_brand_alias(const std::string& from,
                                    const std::string& to) {
    if (from.empty() || to.empty()) {
        throw ValidationError("brand alias endpoints must be nonempty");
    }
    brand_aliases_[from] = to;
}

ErrorClass classify_error(const std::string& error_kind,
                          const ErrorTaxonomy& taxonomy) {
    if (error_kind.empty()) {
        throw ValidationError("error kind must be nonempty");
    }
    return taxonomy.is_signature(error_kind) ? ErrorClass::Signature
                                             : ErrorClass::Semantics;
}

std::string OutcomeSummary::label() const {
    return pass ? "PASS" : "FAIL(" + error_kind + ")";
}

ResultMatrix build_matrix(const std::vector<ExecutionResult>& results,
                          const DeviceRegistry& registry) {
    ResultMatrix matrix;
    // api -> device -> distinct summaries seen, insertion order kept so
    // flaky reports list the first-observed label first.
    std::map<std::string, std::map<DeviceId, std::vector<OutcomeSummary>>>
        observed;
    for (const ExecutionResult& result : results) {
        if (result.outcome == OutcomeKind::SkippedCrash) {
            continue;  // never executed, no behaviour to record
        }
        if (!registry.contains(result.device)) {
            matrix.rejected.push_back(result);
            continue;
        }
        OutcomeSummary summary;
        if (result.outcome == OutcomeKind::Pass) {
            summary.pass = true;
        } else {
            summary.pass = false;
            summary.error_kind =
                result.error_kind.empty() ? "Crash" : result.error_kind;
        }
        auto& seen = observed[result.target_api][result.device];
        if (std::find(seen.begin(), seen.end(), summary) == seen.end()) {
            seen.push_back(summary);
        }
    }
    for (const auto& [api, by_device] : observed) {
        for (const auto& [device, summaries] : by_device) {
            if (summaries.size() == 1) {
                matrix.cells[api].emplace(device, summaries.front());
                if (!matrix.profiles.contains(device)) {
                    matrix.profiles.emplace(device,
                                            registry.profile(device));
                }
            } else {
                FlakyRecord record;
                record.target_api = api;
                record.device = device;
                for (const OutcomeSummary& summary : summaries) {
                    record.observed.push_back(summary.label());
                }
                std::sort(record.observed.begin(), record.observed.end());
                matrix.flaky.push_back(std::move(record));
            }
        }
    }
    // Cells keyed by api may have vanished entirely into the flaky list;
    // drop empty rows so detect_issues never sees them.
    for (auto it = matrix.cells.begin(); it != matrix.cells.end();) {
        it = it->second.empty() ? matrix.cells.erase(it) : std::next(it);
    }
    return matrix;
}

const char* to_string(IssueKind kind) {
    switch (kind) {
        case IssueKind::Signature:
            return "SIGNATURE";
        case IssueKind::Semantics:
            return "SEMANTICS";
        case IssueKind::Mixed:
            return "MIXED";
    }
    return "SEMANTICS";
}

const char* to_string(IssueScope scope) {
    switch (scope) {
        case IssueScope::VersionSpecific:
            return "VERSION_SPECIFIC";
        case IssueScope::VendorSpecific:
            return "VENDOR_SPECIFIC";
        case IssueScope::ModelSpecific:
            return "MODEL_SPECIFIC";
    }
    return "VERSION_SPECIFIC";
}

IssueScope scope_issue(const std::map<DeviceId, OutcomeSummary>& row,
                       const std::map<DeviceId, DeviceProfile>& profiles,
                       const ErrorTaxonomy& taxonomy) {
    bool vendor = false;
    for (auto a = row.begin(); a != row.end(); ++a) {
        const DeviceProfile& pa = profiles.at(a->first);
        for (auto b = std::next(a); b != row.end(); ++b) {
            if (a->second == b->second) continue;
            const DeviceProfile& pb = profiles.at(b->first);
            if (pa.api_level != pb.api_level) continue;
            if (taxonomy.canonical_brand(pa.brand) ==
                taxonomy.canonical_brand(pb.brand)) {
                return IssueScope::ModelSpecific;
            }
            vendor = true;
        }
    }
    return vendor ? IssueScope::VendorSpecific : IssueScope::VersionSpecific;
}

std::vector<CompatibilityIssue> detect_issues(const ResultMatrix& matrix,
                                              const ErrorTaxonomy& taxonomy) {
    std::vector<CompatibilityIssue> issues;
    for (const auto& [api, row] : matrix.cells) {
        if (row.size() < 2) continue;
        const OutcomeSummary& first = row.begin()->second;
        const bool uniform =
            std::all_of(row.begin(), row.end(), [&](const auto& cell) {
                return cell.second == first;
            });
        if (uniform) continue;

        CompatibilityIssue issue;
        issue.target_api = api;
        bool any_signature = false;
        bool any_semantics = false;
        for (const auto& [device, summary] : row) {
            issue.evidence[summary.label()].push_back(device);
            if (!summary.pass) {
                if (classify_error(summary.error_kind, taxonomy) ==
                    ErrorClass::Signature) {
                    any_signature = true;
                } else {
                    any_semantics = true;
                }
            }
        }
        if (any_signature && any_semantics) {
            issue.kind = IssueKind::Mixed;
        } else if (any_signature) {
            issue.kind = IssueKind::Signature;
        } else {
            issue.kind = IssueKind::Semantics;
        }
        issue.scope = scope_issue(row, matrix.profiles, taxonomy);
        issues.push_back(std::move(issue));
    }
    return issues;
}

std::vector<SurveyResponse> load_survey(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open survey file '" + path + "'");
    }
    std::vector<SurveyResponse> responses;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            responses.push_back(
                nlohmann::json::parse(line).get<SurveyResponse>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": " + e.what());
        } catch (const ValidationError& e) {
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": " + e.what());
        }
    }
    return responses;
}

int whole_percent(std::size_t part, std::size_t total) {
    if (total == 0) return 0;
    return static_cast<int>(std::llround(100.0 * static_cast<double>(part) /
                                         static_cast<double>(total)));
}

SurveyScores survey_scores(const std::vector<SurveyResponse>& responses) {
    if (responses.empty()) {
        throw ValidationError("survey has no responses");
    }
    std::map<int, std::vector<int>> by_question;
    for (const SurveyResponse& response : responses) {
        if (response.question_id < 1 || response.question_id > 6) {
            throw ValidationError("question_id outside [1, 6]");
        }
        if (response.rating < 1 || response.rating > 5) {
            throw ValidationError("rating outside [1, 5]");
        }
        by_question[response.question_id].push_back(response.rating);
    }
    SurveyScores scores;
    for (const auto& [question, ratings] : by_question) {
        const std::size_t total = ratings.size();
        const auto count_in = [&](int lo, int hi) {
            return static_cast<std::size_t>(
                std::count_if(ratings.begin(), ratings.end(), [&](int r) {
                    return r >= lo && r <= hi;
                }));
        };
        // Components are rounded to whole percent before differencing.
        scores.ces[question] = whole_percent(count_in(4, 5), total) -
                               whole_percent(count_in(1, 2), total);
        scores.css[question] = whole_percent(count_in(4, 5), total);
        if (question == 6) {
            scores.nps = whole_percent(count_in(4, 5), total) -
                         whole_percent(count_in(1, 3), total);
        }
    }
    if (!by_question.contains(6)) {
        throw ValidationError(
            "survey has no responses for the recommendation question (6)");
    }
    return scores;
}

}  // namespace compatlab
