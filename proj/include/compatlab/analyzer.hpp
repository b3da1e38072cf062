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
#include <set>
#include <string>
#include <vector>

#include "compatlab/registry.hpp"
#include "compatlab/results.hpp"

namespace compatlab {

/// Splits observed error kinds into signature breaks (the API's shape is
/// gone) and everything else, which counts as a semantics change. The
/// signature set is extensible through a configuration file; unknown
/// kinds are semantics by definition.
class ErrorTaxonomy {
public:
    ErrorTaxonomy();

    static ErrorTaxonomy defaults();
    /// JSON object with optional keys "signature_kinds" (added to the
    /// default set) and "brand_aliases" (e.g. folding a sub-brand into
    /// its parent for vendor scoping; empty by default).
    static ErrorTaxonomy from_file(const std::string& path);
    static ErrorTaxonomy from_json_text(const std::string& text,
                                        const std::string& origin);

    bool is_signature(const std::string& error_kind) const;
    /// Brand after alias folding; identity for unknown brands.
    std::string canonical_brand(const std::string& brand) const;

    const std::set<std::string>& signature_kinds() const {
        return signature_kinds_;
    }
    const std::map<std::string, std::string>& brand_aliases() const {
        return brand_aliases_;
    }
    void add_signature_kind(const std::string& kind);
    void add_brand_alias(const std::string& from, const std::string& to);

private:
    std::set<std::string> signature_kinds_;
    std::map<std::string, std::string> brand_aliases_;
};

enum class ErrorClass { Signature, Semantics };

/// Signature iff the kind is in the taxonomy's signature set.
ErrorClass classify_error(const std::string& error_kind,
                          const ErrorTaxonomy& taxonomy);

/// Normalized behaviour of one API on one device: pass, or fail with an
/// error kind. Crashes fold into failures; skipped tests produce nothing.
struct OutcomeSummary {
    bool pass = true;
    std::string error_kind;

    auto operator<=>(const OutcomeSummary&) const = default;

    /// "PASS" or "FAIL(<error_kind>)"; evidence partition labels.
    std::string label() const;
};

/// A device whose repeated runs of one API contradicted each other. Such
/// cells are excluded from issue detection and reported separately.
struct FlakyRecord {
    std::string target_api;
    DeviceId device;
    std::vector<std::string> observed;  // distinct labels, sorted

    bool operator==(const FlakyRecord&) const = default;
};

/// Per-API outcome summaries across the fleet, one summary per
/// (api, device) cell.
struct ResultMatrix {
    /// api -> device -> summary.
    std::map<std::string, std::map<DeviceId, OutcomeSummary>> cells;
    std::map<DeviceId, DeviceProfile> profiles;
    std::vector<FlakyRecord> flaky;
    /// Records naming devices that were never registered, skipped.
    std::vector<ExecutionResult> rejected;
};

/// Aggregates results into per-(api, device) summaries. Repeats must
/// agree; contradictory cells go to `flaky`. Results from unregistered
/// devices go to `rejected`. SkippedCrash records carry no behaviour and
/// are ignored.
ResultMatrix build_matrix(const std::vector<ExecutionResult>& results,
                          const DeviceRegistry& registry);

enum class IssueKind { Signature, Semantics, Mixed };
enum class IssueScope { VersionSpecific, VendorSpecific, ModelSpecific };

const char* to_string(IssueKind kind);
const char* to_string(IssueScope scope);

/// One flagged API: its outcome summaries are not all identical.
struct CompatibilityIssue {
    std::string target_api;
    IssueKind kind = IssueKind::Semantics;
    IssueScope scope = IssueScope::VersionSpecific;
    /// Evidence partition: outcome label -> devices showing it.
    std::map<std::string, std::vector<DeviceId>> evidence;

    bool operator==(const CompatibilityIssue&) const = default;
};

/// Flags every API whose summaries are not all identical (a pass/fail
/// split or differing error kinds). Kind is Signature or Semantics when
/// every failing kind falls in that one class, Mixed otherwise. Scope
/// precedence: Model beats Vendor beats Version.
std::vector<CompatibilityIssue> detect_issues(const ResultMatrix& matrix,
                                              const ErrorTaxonomy& taxonomy);

/// ModelSpecific if two devices of one brand at one api level disagree;
/// else VendorSpecific if two devices of different brands at the same
/// api level disagree; else VersionSpecific.
IssueScope scope_issue(const std::map<DeviceId, OutcomeSummary>& row,
                       const std::map<DeviceId, DeviceProfile>& profiles,
                       const ErrorTaxonomy& taxonomy);

/// One answer to a five-point survey question. Question ids run 1 to 6.
struct SurveyResponse {
    int question_id = 1;
    int rating = 3;

    bool operator==(const SurveyResponse&) const = default;
};

std::vector<SurveyResponse> load_survey(const std::string& path);

/// Per-question effort and satisfaction scores plus the fleet-wide
/// recommendation score, all in whole percent. Components are rounded
/// to whole percent before any subtraction.
struct SurveyScores {
    /// question -> %(ratings 4-5) - %(ratings 1-2).
    std::map<int, int> ces;
    /// question -> % of ratings in {4, 5}.
    std::map<int, int> css;
    /// %(ratings 4-5) - %(ratings 1-3) over the final question (6).
    int nps = 0;
};

/// Throws ValidationError on an empty response set, a rating outside
/// [1, 5], a question id outside [1, 6], or no responses for question 6.
SurveyScores survey_scores(const std::vector<SurveyResponse>& responses);

/// Round-half-up percentage of part in total, as an integer 0..100.
int whole_percent(std::size_t part, std::size_t total);

}  // namespace compatlab
