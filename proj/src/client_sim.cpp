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

#include "compatlab/client_sim.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "compatlab/error.hpp"
#include "compatlab/hash.hpp"
#include "compatlab/json_io.hpp"
#include "compatlab/transport.hpp"

namespace compatlab {

bool is_suitable_time(const DeviceState& state,
                      const SuitabilityThresholds& thresholds) {
    return !state.screen_on && state.idle_mode &&
           state.memory_usage < thresholds.memory && state.charging &&
           state.battery_level > thresholds.battery;
}

StateTrace::StateTrace(
    std::vector<std::pair<std::int64_t, DeviceState>> entries)
    : entries_(std::move(entries)) {
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const auto& a, const auto& b) {
                         return a.first < b.first;
                     });
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        if (entries_[i].first == entries_[i - 1].first) {
            throw ValidationError("state trace has duplicate tick " +
                                  std::to_string(entries_[i].first));
        }
    }
}

StateTrace StateTrace::always_idle() {
    StateTrace trace;
    trace.always_idle_ = true;
    return trace;
}

StateTrace StateTrace::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open state trace file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return from_string(text.str(), path);
}

namespace {

std::string trimmed(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

DeviceState state_from_json(const nlohmann::json& j) {
    return j.get<DeviceState>();
}

}  // namespace

StateTrace StateTrace::from_string(const std::string& text,
                                   const std::string& origin) {
    const std::string body = trimmed(text);
    if (body == "always-idle" || body == "\"always-idle\"") {
        return always_idle();
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (j.is_string() && j.get<std::string>() == "always-idle") {
        return always_idle();
    }
    if (!j.is_array()) {
        throw ParseError(origin +
                         ": expected \"always-idle\" or a list of "
                         "(tick, state) entries");
    }
    std::vector<std::pair<std::int64_t, DeviceState>> entries;
    try {
        for (const auto& entry : j) {
            if (entry.is_array()) {
                if (entry.size() != 2) {
                    throw ValidationError("trace entry is not a pair");
                }
                entries.emplace_back(entry.at(0).get<std::int64_t>(),
                                     state_from_json(entry.at(1)));
            } else if (entry.is_object() && entry.contains("state")) {
                entries.emplace_back(entry.at("tick").get<std::int64_t>(),
                                     state_from_json(entry.at("state")));
            } else if (entry.is_object()) {
                // Flat form: the tick rides alongside the state fields.
                nlohmann::json state = entry;
                const std::int64_t tick = state.at("tick").get<std::int64_t>();
                state.erase("tick");
                entries.emplace_back(tick, state_from_json(state));
            } else {
                throw ValidationError("trace entry is not a pair or object");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return StateTrace(std::move(entries));
}

std::optional<DeviceState> StateTrace::state_at(std::int64_t tick) const {
    if (always_idle_) {
        return DeviceState{};  // defaults are suitable
    }
    const auto after = std::upper_bound(
        entries_.begin(), entries_.end(), tick,
        [](std::int64_t t, const auto& entry) { return t < entry.first; });
    if (after == entries_.begin()) {
        return std::nullopt;
    }
    return std::prev(after)->second;
}

bool StateTrace::suitable_at(std::int64_t tick,
                             const SuitabilityThresholds& thresholds) const {
    const auto state = state_at(tick);
    return state && is_suitable_time(*state, thresholds);
}

std::optional<std::int64_t> StateTrace::next_suitable(
    std::int64_t from, const SuitabilityThresholds& thresholds) const {
    if (always_idle_) {
        return from;
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const std::int64_t seg_start = entries_[i].first;
        const std::int64_t seg_end = i + 1 < entries_.size()
                                         ? entries_[i + 1].first
                                         : std::numeric_limits<std::int64_t>::max();
        if (seg_end <= from) continue;
        if (is_suitable_time(entries_[i].second, thresholds)) {
            return std::max(from, seg_start);
        }
    }
    return std::nullopt;
}

OutcomeOracle::OutcomeOracle(std::vector<OracleRule> rules)
    : rules_(std::move(rules)) {}

OutcomeOracle OutcomeOracle::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open oracle file '" + path + "'");
    }
    return from_stream(in, path);
}

OutcomeOracle OutcomeOracle::from_stream(std::istream& in,
                                         const std::string& origin) {
    std::vector<OracleRule> rules;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        try {
            rules.push_back(nlohmann::json::parse(line).get<OracleRule>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(origin + ": line " + std::to_string(line_no) +
                             ": " + e.what());
        } catch (const ValidationError& e) {
            throw ParseError(origin + ": line " + std::to_string(line_no) +
                             ": " + e.what());
        }
    }
    return OutcomeOracle(std::move(rules));
}

namespace {

bool rule_matches(const OracleRule& rule, const DeviceProfile& profile,
                  const std::string& api, const LifecycleStep& step) {
    if (rule.api != api) return false;
    if (rule.step_id) {
        if (*rule.step_id != step.step_id) return false;
    } else if (step.phase != Phase::Test) {
        return false;
    }
    if (rule.brand && *rule.brand != profile.brand) return false;
    if (rule.model && *rule.model != profile.model) return false;
    if (rule.api_level && *rule.api_level != profile.api_level) return false;
    if (rule.api_level_min && profile.api_level < *rule.api_level_min) {
        return false;
    }
    if (rule.api_level_max && profile.api_level > *rule.api_level_max) {
        return false;
    }
    return true;
}

int rule_specificity(const OracleRule& rule) {
    if (rule.model) return 3;
    if (rule.brand) return 2;
    if (rule.api_level || rule.api_level_min || rule.api_level_max) return 1;
    return 0;
}

}  // namespace

OutcomeOracle::StepOutcome OutcomeOracle::evaluate(
    const DeviceProfile& profile, const std::string& api,
    const LifecycleStep& step) const {
    const OracleRule* best = nullptr;
    int best_rank = -1;
    for (const OracleRule& rule : rules_) {
        if (!rule_matches(rule, profile, api, step)) continue;
        const int rank = rule_specificity(rule);
        if (rank > best_rank) {
            best = &rule;
            best_rank = rank;
        }
    }
    if (!best) {
        return StepOutcome{};
    }
    StepOutcome outcome;
    outcome.kind = best->outcome;
    outcome.error_kind = best->error_kind;
    outcome.message = best->message;
    if (outcome.kind == OutcomeKind::Crashed && outcome.error_kind.empty()) {
        outcome.error_kind = "Crash";
    }
    return outcome;
}

CrashPredicate no_crashes() {
    return [](const DeviceId&, const std::string&) { return false; };
}

CrashPredicate seeded_crashes(double probability, std::uint64_t seed) {
    if (probability <= 0.0) return no_crashes();
    return [probability, seed](const DeviceId& device,
                               const std::string& test_id) {
        const std::string key = device + '\x1f' + test_id;
        return keyed_uniform(key, seed) < probability;
    };
}

CrashPredicate crash_every_nth(std::size_t n) {
    if (n == 0) return no_crashes();
    struct Counters {
        std::mutex mutex;
        std::map<DeviceId, std::size_t> seen;
    };
    auto counters = std::make_shared<Counters>();
    return [n, counters](const DeviceId& device, const std::string&) {
        const std::lock_guard<std::mutex> lock(counters->mutex);
        const std::size_t count = ++counters->seen[device];
        return count % n == 0;
    };
}

CaseOutcome execute_case(const TestCase& test, const DeviceProfile& profile,
                         const OutcomeOracle& oracle, bool crash_at_test) {
    CaseOutcome recorded;
    bool failed = false;
    bool setup_failed = false;
    for (const LifecycleStep& step : test.lifecycle) {
        if (step.phase == Phase::Test) {
            if (setup_failed) continue;  // TEST body skipped
            if (crash_at_test) {
                return CaseOutcome{OutcomeKind::Crashed, "Crash",
                                   "runner crashed", ""};
            }
            const auto outcome = oracle.evaluate(profile, test.target_api, step);
            if (outcome.kind == OutcomeKind::Crashed) {
                return CaseOutcome{OutcomeKind::Crashed, outcome.error_kind,
                                   outcome.message, ""};
            }
            if (outcome.kind == OutcomeKind::Fail && !failed) {
                failed = true;
                recorded = CaseOutcome{OutcomeKind::Fail, outcome.error_kind,
                                       outcome.message, ""};
            }
        } else {
            const auto outcome = oracle.evaluate(profile, test.target_api, step);
            if (outcome.kind == OutcomeKind::Crashed) {
                return CaseOutcome{OutcomeKind::Crashed, outcome.error_kind,
                                   outcome.message, step.step_id};
            }
            if (outcome.kind == OutcomeKind::Fail) {
                const bool is_setup = step.phase == Phase::BeforeClass ||
                                      step.phase == Phase::Before;
                if (is_setup) setup_failed = true;
                if (!failed) {
                    failed = true;
                    recorded =
                        CaseOutcome{OutcomeKind::Fail, outcome.error_kind,
                                    outcome.message, step.step_id};
                }
            }
        }
    }
    return recorded;
}

std::string SessionLog::to_jsonl() const {
    std::string out;
    nlohmann::json header{{"device_id", device_id},
                          {"final_tick", final_tick},
                          {"completed", completed}};
    out += header.dump();
    out += '\n';
    for (const SessionEvent& event : events) {
        out += nlohmann::json{{"event", event}}.dump();
        out += '\n';
    }
    for (const ExecutionResult& result : results) {
        out += nlohmann::json{{"result", result}}.dump();
        out += '\n';
    }
    return out;
}

DeviceId register_over_channel(Channel& channel,
                               const DeviceProfile& profile) {
    const Message reply = channel.request(RegisterRequest{profile});
    if (const auto* ok = std::get_if<RegisteredReply>(&reply)) {
        return ok->device_id;
    }
    if (const auto* err = std::get_if<ErrorReply>(&reply)) {
        throw ProtocolError("registration rejected: " + err->code + ": " +
                            err->detail);
    }
    throw ProtocolError("unexpected reply to registration");
}

namespace {

struct SessionClock {
    const StateTrace& trace;
    const SuitabilityThresholds& thresholds;
    std::int64_t tick = 0;

    bool advance_to_suitable(std::int64_t from) {
        const auto next = trace.next_suitable(from, thresholds);
        if (!next) return false;
        tick = *next;
        return true;
    }
};

}  // namespace

SessionLog run_device(const DeviceId& device_id, const DeviceProfile& profile,
                      Channel& channel, const OutcomeOracle& oracle,
                      const StateTrace& trace, const SessionOptions& options) {
    SessionLog log;
    log.device_id = device_id;
    SessionClock clock{trace, options.thresholds};
    TestBundle bundle;  // starts empty at version 0
    std::int64_t executed = 0;
    std::optional<CrashReport> pending_crash;
    std::vector<std::string> pending_tail;  // unexecuted rest after a crash

    // Sends at a suitable tick only; transport failures park the session
    // until the next suitable tick. Empty result = trace exhausted.
    const auto exchange =
        [&](const Message& request) -> std::optional<Message> {
        for (;;) {
            if (!trace.suitable_at(clock.tick, options.thresholds) &&
                !clock.advance_to_suitable(clock.tick)) {
                return std::nullopt;
            }
            try {
                return channel.request(request);
            } catch (const TransportError& e) {
                log.events.push_back({clock.tick, "retry", e.what()});
                if (!clock.advance_to_suitable(clock.tick + 1)) {
                    return std::nullopt;
                }
            }
        }
    };

    if (!clock.advance_to_suitable(0)) {
        log.events.push_back({0, "skip", "no suitable tick in trace"});
        return log;
    }

    for (;;) {
        const auto reply = exchange(
            BatchRequest{device_id, executed, bundle.version, pending_crash});
        if (!reply) {
            log.events.push_back({clock.tick, "skip", "trace exhausted"});
            break;
        }
        if (std::holds_alternative<DoneReply>(*reply)) {
            log.events.push_back({clock.tick, "done", ""});
            log.completed = true;
            break;
        }
        const auto* batch = std::get_if<BatchReply>(&*reply);
        if (!batch) {
            const auto* err = std::get_if<ErrorReply>(&*reply);
            throw ProtocolError(
                err ? "service rejected batch request: " + err->code + ": " +
                          err->detail
                    : "unexpected reply to batch request");
        }
        pending_crash.reset();  // delivered with this request
        if (batch->patch) {
            bundle = apply_patch(bundle, *batch->patch);
            log.events.push_back({clock.tick, "patch",
                                  "version " + std::to_string(bundle.version)});
        }
        if (batch->manifest.empty()) {
            continue;  // patch-only reply, ask again with the new version
        }

        // Leading manifest entries matching the unexecuted tail of the
        // crashed batch are re-shipped work; charge the rebuild penalty.
        std::size_t reshipped = 0;
        while (reshipped < batch->manifest.size() &&
               reshipped < pending_tail.size() &&
               batch->manifest[reshipped] == pending_tail[reshipped]) {
            ++reshipped;
        }
        pending_tail.clear();
        clock.tick +=
            options.rebuild_penalty * static_cast<std::int64_t>(reshipped);
        log.events.push_back(
            {clock.tick, "batch",
             "index " + std::to_string(batch->batch_index) + ", " +
                 std::to_string(batch->manifest.size()) + " tests"});

        std::vector<ExecutionResult> results;
        bool trace_exhausted = false;
        for (std::size_t i = 0; i < batch->manifest.size(); ++i) {
            if (!trace.suitable_at(clock.tick, options.thresholds) &&
                !clock.advance_to_suitable(clock.tick)) {
                trace_exhausted = true;
                break;
            }
            const std::string& test_id = batch->manifest[i];
            const auto it = bundle.cases.find(test_id);
            if (it == bundle.cases.end()) {
                throw ProtocolError("manifest references test '" + test_id +
                                    "' missing from bundle version " +
                                    std::to_string(bundle.version));
            }
            const bool crash_now = options.crash(device_id, test_id);
            const CaseOutcome outcome =
                execute_case(it->second, profile, oracle, crash_now);
            ++clock.tick;
            ++executed;
            ExecutionResult result;
            result.test_id = test_id;
            result.target_api = it->second.target_api;
            result.device = device_id;
            result.outcome = outcome.kind;
            result.error_kind = outcome.error_kind;
            result.message = outcome.message;
            result.failed_phase = outcome.failed_phase;
            result.batch_index = batch->batch_index;
            result.timestamp = clock.tick;
            results.push_back(std::move(result));
            if (outcome.kind == OutcomeKind::Crashed) {
                log.events.push_back({clock.tick, "crash", test_id});
                pending_crash = CrashReport{batch->batch_index,
                                            static_cast<std::int64_t>(i)};
                pending_tail.assign(batch->manifest.begin() +
                                        static_cast<std::ptrdiff_t>(i) + 1,
                                    batch->manifest.end());
                break;
            }
        }
        if (trace_exhausted) {
            log.events.push_back(
                {clock.tick, "skip", "trace exhausted mid-batch"});
            break;
        }

        const auto ack =
            exchange(ResultsUpload{device_id, batch->batch_index, results});
        if (!ack) {
            log.events.push_back(
                {clock.tick, "skip", "trace exhausted before upload"});
            break;
        }
        const auto* accepted = std::get_if<AckReply>(&*ack);
        if (!accepted) {
            const auto* err = std::get_if<ErrorReply>(&*ack);
            throw ProtocolError(
                err ? "service rejected results: " + err->code + ": " +
                          err->detail
                    : "unexpected reply to results upload");
        }
        log.events.push_back(
            {clock.tick, "result",
             std::to_string(results.size()) + " uploaded, " +
                 std::to_string(accepted->accepted_count) + " new"});
        log.results.insert(log.results.end(), results.begin(), results.end());
    }

    log.final_tick = clock.tick;
    return log;
}

}  // namespace compatlab
