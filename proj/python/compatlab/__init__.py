# Copyright 2026 The compatlab Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Crowdsourced compatibility-testing campaign simulator."""

from ._core import (
    CampaignConfig,
    CampaignReport,
    ComparisonCell,
    ComparisonTable,
    CompatlabError,
    __version__,
    analyze_results,
    apply_patch,
    compare_strategies,
    diff_bundles,
    is_suitable_time,
    run_campaign,
    survey_scores,
)

__all__ = [
    "CampaignConfig",
    "CampaignReport",
    "ComparisonCell",
    "ComparisonTable",
    "CompatlabError",
    "__version__",
    "analyze_results",
    "apply_patch",
    "compare_strategies",
    "diff_bundles",
    "is_suitable_time",
    "run_campaign",
    "survey_scores",
]
