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
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "compatlab/bundler.hpp"
#include "compatlab/registry.hpp"
#include "compatlab/results.hpp"
#include "compatlab/scheduler.hpp"
#include "compatlab/testbank.hpp"

namespace compatlab {

/// Snapshot of the conditions that gate background test execution.
struct DeviceState {
    bool screen_on = false;
    bool idle_mode = true;
    double memory_usage = 0.0;   // fraction of RAM in use, [0, 1]
    double battery_level = 1.0;  // charge fraction, [0, 1]
    bool charging = true;

    bool operator==(const DeviceState&) const = default;
};

struct SuitabilityThresholds {
    double memory = 0.25;
    double battery = 0.60;
};

/// A device may run tests only while it is unused (screen off and in idle
/// mode), memory usage is strictly below the cap, and it is charging with
/// battery strictly above the floor.
bool is_suitable_time(const DeviceState& state,
                      const SuitabilityThresholds& thresholds = {});

/// Device state over logical time. Entries are kept sorted by tick; the
/// state at tick t is the latest entry at or before t. Before the first
/// entry the device counts as unsuitable.
class StateTrace {
public:
    StateTrace() = default;
    explicit StateTrace(
        std::vector<std::pair<std::int64_t, DeviceState>> entries);

    /// Trace that is suitable at every tick.
    static StateTrace always_idle();
    /// Either the keyword "always-idle" or a JSON list of (tick, state).
    static StateTrace from_file(const std::string& path);
    static StateTrace from_string(const std::string& text,
                                  const std::string& origin);

    std::optional<DeviceState> state_at(std::int64_t tick) const;
    bool suitable_at(std::int64_t tick,
                     const SuitabilityThresholds& thresholds = {}) const;
    /// Earliest suitable tick >= `from`, if any entry ever yields one.
    std::optional<std::int64_t> next_suitable(
        std::int64_t from, const SuitabilityThresholds& thresholds = {}) const;

    const std::vector<std::pair<std::int64_t, DeviceState>>& entries() const {
        return entries_;
    }
    bool is_always_idle() const { return always_idle_; }

private:
    std::vector<std::pair<std::int64_t, DeviceState>> entries_;
    bool always_idle_ = false;
};

/// One behaviour rule: on devices matching the selector fields, the given
/// API produces this outcome. A rule with step_id fires at that lifecycle
/// step; without one it fires at the TEST step.
struct OracleRule {
    std::string api;  // required selector
    std::optional<std::string> step_id;
    std::optional<std::string> brand;
    std::optional<std::string> model;
    std::optional<int> api_level;      // exact level
    std::optional<int> api_level_min;  // inclusive range, either bound
    std::optional<int> api_level_max;  //   may be open
    OutcomeKind outcome = OutcomeKind::Pass;
    std::string error_kind;
    std::string message;

    bool operator==(const OracleRule&) const = default;
};

/// Decides how each lifecycle step behaves on a given device profile.
/// The most specific matching rule wins: model beats brand beats api
/// level (exact or range) beats api-only. Ties go to the earliest rule;
/// with no match a step passes.
class OutcomeOracle {
public:
    OutcomeOracle() = default;
    explicit OutcomeOracle(std::vector<OracleRule> rules);

    static OutcomeOracle from_file(const std::string& path);
    static OutcomeOracle from_stream(std::istream& in,
                                     const std::string& origin);

    struct StepOutcome {
        OutcomeKind kind = OutcomeKind::Pass;  // Pass, Fail or Crashed
        std::string error_kind;
        std::string message;
    };

    StepOutcome evaluate(const DeviceProfile& profile, const std::string& api,
                         const LifecycleStep& step) const;

    const std::vector<OracleRule>& rules() const { return rules_; }

private:
    std::vector<OracleRule> rules_;
};

/// True when the test should crash the runner on this device. Keyed on
/// (device, test) only, so both crash strategies see identical crash sets.
using CrashPredicate =
    std::function<bool(const DeviceId&, const std::string&)>;

CrashPredicate no_crashes();
/// Bernoulli(p) draw keyed on device id, test id and seed.
CrashPredicate seeded_crashes(double probability, std::uint64_t seed);
/// Crashes every n-th distinct test id per device (1-based count).
CrashPredicate crash_every_nth(std::size_t n);

/// Net effect of running one test's lifecycle. A setup failure skips the
/// TEST step but still runs teardown; a crash aborts the case on the spot.
struct CaseOutcome {
    OutcomeKind kind = OutcomeKind::Pass;
    std::string error_kind;
    std::string message;
    std::string failed_phase;  // empty when the TEST step itself failed
};

/// `crash_at_test` fires at the TEST step, before the oracle is consulted.
CaseOutcome execute_case(const TestCase& test, const DeviceProfile& profile,
                         const OutcomeOracle& oracle, bool crash_at_test);

/// One line of a device session log, for replay and determinism checks.
struct SessionEvent {
    std::int64_t tick = 0;
    std::string what;  // register, patch, batch, result, crash, skip,
                       // retry, done
    std::string detail;

    bool operator==(const SessionEvent&) const = default;
};

struct SessionLog {
    DeviceId device_id;
    std::vector<SessionEvent> events;
    std::vector<ExecutionResult> results;
    std::int64_t final_tick = 0;
    bool completed = false;  // server said done (vs. trace ran out)

    std::string to_jsonl() const;
};

struct SessionOptions {
    SuitabilityThresholds thresholds;
    /// Ticks charged per test that a crash forces back into the queue.
    std::int64_t rebuild_penalty = 1;
    CrashPredicate crash = no_crashes();
};

class Channel;  // transport.hpp

/// Sends a registration for `profile` and returns the assigned device id.
DeviceId register_over_channel(Channel& channel, const DeviceProfile& profile);

/// Drives one already registered device against a dispatch service over
/// `channel`: at suitable ticks it pulls batches, applies bundle patches,
/// executes tests against the oracle and uploads results, until the
/// service reports the queue done or the trace offers no further suitable
/// tick. Transport failures are logged and retried at the next suitable
/// tick.
SessionLog run_device(const DeviceId& device_id, const DeviceProfile& profile,
                      Channel& channel, const OutcomeOracle& oracle,
                      const StateTrace& trace, const SessionOptions& options);

}  // namespace compatlab
