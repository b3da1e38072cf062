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
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "compatlab/error.hpp"
#include "compatlab/registry.hpp"
#include "compatlab/scheduler.hpp"
#include "helpers.hpp"

using namespace compatlab;

namespace {

std::vector<std::string> numbered_queue(std::size_t n) {
    std::vector<std::string> queue;
    queue.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        queue.push_back("q" + std::to_string(i));
    }
    return queue;
}

struct ReplayResult {
    std::vector<std::string> executed;
    std::vector<std::string> skipped;
};

/// Reference simulator: a direct transcription of the two strategies,
/// advancing one test at a time over an explicit remaining-list. Kept
/// deliberately naive so disagreements indict the cursor.
ReplayResult naive_replay(const std::vector<std::string>& queue,
                          std::size_t batch_size, CrashStrategy strategy,
                          const std::set<std::string>& crash_set) {
    ReplayResult out;
    if (strategy == CrashStrategy::Rebuild) {
        std::vector<std::string> remaining = queue;
        while (!remaining.empty()) {
            const std::size_t take = std::min(batch_size, remaining.size());
            std::size_t ran = take;
            for (std::size_t i = 0; i < take; ++i) {
                out.executed.push_back(remaining[i]);
                if (crash_set.count(remaining[i])) {
                    ran = i + 1;
                    break;
                }
            }
            remaining.erase(remaining.begin(),
                            remaining.begin() +
                                static_cast<std::ptrdiff_t>(ran));
        }
    } else {
        // Fixed batch boundaries over the original queue.
        for (std::size_t start = 0; start < queue.size();
             start += batch_size) {
            const std::size_t end =
                std::min(start + batch_size, queue.size());
            bool crashed = false;
            for (std::size_t i = start; i < end; ++i) {
                if (crashed) {
                    out.skipped.push_back(queue[i]);
                } else {
                    out.executed.push_back(queue[i]);
                    if (crash_set.count(queue[i])) crashed = true;
                }
            }
        }
    }
    return out;
}

/// Drives a DispatchCursor against the same crash set, collecting what it
/// actually issues.
ReplayResult drive_cursor(const std::vector<std::string>& queue,
                          std::size_t batch_size, CrashStrategy strategy,
                          const std::set<std::string>& crash_set,
                          DispatchCursor* out_cursor = nullptr) {
    DispatchCursor cursor(queue, strategy, batch_size);
    ReplayResult out;
    std::optional<CrashReport> crash;
    for (;;) {
        const BatchOutcome outcome = cursor.next_batch(crash);
        crash.reset();
        for (const std::string& id : outcome.skipped) {
            out.skipped.push_back(id);
        }
        if (!outcome.batch) break;
        const Batch& batch = *outcome.batch;
        for (std::size_t i = 0; i < batch.test_ids.size(); ++i) {
            out.executed.push_back(batch.test_ids[i]);
            if (crash_set.count(batch.test_ids[i])) {
                crash = CrashReport{batch.index,
                                    static_cast<std::int64_t>(i)};
                break;
            }
        }
    }
    if (out_cursor) *out_cursor = cursor;
    return out;
}

}  // namespace

TEST_CASE("round-robin allocation: 10 tests over a cluster of two") {
    DeviceRegistry registry;
    const DeviceId a =
        registry.register_device(testutil::make_profile("B", "M", 30));
    const DeviceId b =
        registry.register_device(testutil::make_profile("B", "M", 30));
    const auto queue = numbered_queue(10);
    const Assignment assignment =
        allocate(queue, registry.cluster_devices(), 1);
    REQUIRE(assignment.queues.size() == 2);
    CHECK(assignment.queues.at(a) ==
          std::vector<std::string>{"q0", "q2", "q4", "q6", "q8"});
    CHECK(assignment.queues.at(b) ==
          std::vector<std::string>{"q1", "q3", "q5", "q7", "q9"});
}

TEST_CASE("singleton clusters each receive the whole list") {
    DeviceRegistry registry;
    std::vector<DeviceId> ids;
    for (int i = 0; i < 3; ++i) {
        ids.push_back(registry.register_device(
            testutil::make_profile("B" + std::to_string(i), "M", 30)));
    }
    const auto queue = numbered_queue(7);
    const Assignment assignment =
        allocate(queue, registry.cluster_devices(), 1);
    for (const DeviceId& id : ids) {
        CHECK(assignment.queues.at(id) == queue);
    }
}

TEST_CASE("redundancy places every test on exactly that many devices") {
    DeviceRegistry registry;
    std::vector<DeviceId> ids;
    for (int i = 0; i < 3; ++i) {
        ids.push_back(registry.register_device(
            testutil::make_profile("B", "M", 30)));
    }
    const auto queue = numbered_queue(10);
    const Assignment assignment =
        allocate(queue, registry.cluster_devices(), 2);

    std::map<std::string, int> copies;
    std::vector<std::size_t> lengths;
    for (const DeviceId& id : ids) {
        const auto& device_queue = assignment.queues.at(id);
        lengths.push_back(device_queue.size());
        std::set<std::string> unique(device_queue.begin(),
                                     device_queue.end());
        CHECK(unique.size() == device_queue.size());
        for (const std::string& test : device_queue) ++copies[test];
    }
    for (const std::string& test : queue) {
        CHECK(copies[test] == 2);
    }
    const auto [lo, hi] = std::minmax_element(lengths.begin(), lengths.end());
    CHECK(*hi - *lo <= 1);
}

TEST_CASE("redundancy larger than a cluster is a configuration error") {
    DeviceRegistry registry;
    for (int i = 0; i < 3; ++i) {
        registry.register_device(testutil::make_profile("B", "M", 30));
    }
    CHECK_THROWS_AS(allocate(numbered_queue(10), registry.cluster_devices(), 4),
                    ConfigError);
}

TEST_CASE("worked example: batch 1000, crash at the 10th test") {
    const auto queue = numbered_queue(5401);

    SUBCASE("rebuild re-batches from the 11th test") {
        DispatchCursor cursor(queue, CrashStrategy::Rebuild, 1000);
        const BatchOutcome first = cursor.next_batch(std::nullopt);
        REQUIRE(first.batch);
        CHECK(first.batch->test_ids.front() == "q0");
        CHECK(first.batch->test_ids.size() == 1000);

        const BatchOutcome next =
            cursor.next_batch(CrashReport{first.batch->index, 9});
        REQUIRE(next.batch);
        CHECK(next.skipped.empty());
        REQUIRE(next.batch->test_ids.size() == 1000);
        // 11th through 1010th tests are queue indices 10..1009.
        CHECK(next.batch->test_ids.front() == "q10");
        CHECK(next.batch->test_ids.back() == "q1009");
    }

    SUBCASE("discard moves on to the next fixed batch") {
        DispatchCursor cursor(queue, CrashStrategy::Discard, 1000);
        const BatchOutcome first = cursor.next_batch(std::nullopt);
        REQUIRE(first.batch);

        const BatchOutcome next =
            cursor.next_batch(CrashReport{first.batch->index, 9});
        REQUIRE(next.batch);
        // The 990 unexecuted tests of batch 0 are dropped.
        CHECK(next.skipped.size() == 990);
        CHECK(next.skipped.front() == "q10");
        CHECK(next.skipped.back() == "q999");
        REQUIRE(next.batch->test_ids.size() == 1000);
        // 1001st through 2000th tests are queue indices 1000..1999.
        CHECK(next.batch->test_ids.front() == "q1000");
        CHECK(next.batch->test_ids.back() == "q1999");
    }
}

TEST_CASE("a short remainder batch precedes DONE") {
    const auto queue = numbered_queue(150);
    DispatchCursor cursor(queue, CrashStrategy::Discard, 100);
    const BatchOutcome first = cursor.next_batch(std::nullopt);
    REQUIRE(first.batch);
    CHECK(first.batch->test_ids.size() == 100);
    const BatchOutcome second = cursor.next_batch(std::nullopt);
    REQUIRE(second.batch);
    CHECK(second.batch->test_ids.size() == 50);
    const BatchOutcome done = cursor.next_batch(std::nullopt);
    CHECK_FALSE(done.batch);
    CHECK(cursor.done());
    CHECK(cursor.coverage().fraction == doctest::Approx(1.0));
}

TEST_CASE("an empty queue is DONE immediately, not an empty batch") {
    DispatchCursor cursor({}, CrashStrategy::Rebuild, 100);
    const BatchOutcome outcome = cursor.next_batch(std::nullopt);
    CHECK_FALSE(outcome.batch);
    CHECK(cursor.done());
}

TEST_CASE("crash reports referencing the wrong batch are protocol errors") {
    const auto queue = numbered_queue(50);
    DispatchCursor cursor(queue, CrashStrategy::Rebuild, 10);
    const BatchOutcome first = cursor.next_batch(std::nullopt);
    REQUIRE(first.batch);

    SUBCASE("stale batch index") {
        CHECK_THROWS_AS(
            cursor.next_batch(CrashReport{first.batch->index + 1, 0}),
            ProtocolError);
    }
    SUBCASE("offset beyond the batch") {
        CHECK_THROWS_AS(cursor.next_batch(CrashReport{first.batch->index, 10}),
                        ProtocolError);
    }
    SUBCASE("negative offset") {
        CHECK_THROWS_AS(cursor.next_batch(CrashReport{first.batch->index, -1}),
                        ProtocolError);
    }
    SUBCASE("crash with nothing outstanding") {
        DispatchCursor fresh(queue, CrashStrategy::Rebuild, 10);
        CHECK_THROWS_AS(fresh.next_batch(CrashReport{0, 0}), ProtocolError);
    }

    // The cursor survives the bad report unchanged.
    const BatchOutcome second = cursor.next_batch(std::nullopt);
    REQUIRE(second.batch);
    CHECK(second.batch->test_ids.front() == "q10");
}

TEST_CASE("cursor agrees with the naive replay simulator") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 200; ++round) {
        const std::size_t queue_len = 1 + rng() % 400;
        const std::size_t batch_size = 1 + rng() % 50;
        const CrashStrategy strategy = (rng() & 1)
                                           ? CrashStrategy::Rebuild
                                           : CrashStrategy::Discard;
        const auto queue = numbered_queue(queue_len);
        std::set<std::string> crash_set;
        for (const std::string& id : queue) {
            if (rng() % 100 < 7) crash_set.insert(id);
        }

        CAPTURE(round);
        CAPTURE(queue_len);
        CAPTURE(batch_size);

        const ReplayResult expected =
            naive_replay(queue, batch_size, strategy, crash_set);
        DispatchCursor cursor;
        const ReplayResult actual =
            drive_cursor(queue, batch_size, strategy, crash_set, &cursor);

        REQUIRE(actual.executed == expected.executed);
        REQUIRE(actual.skipped == expected.skipped);
        CHECK(cursor.executed_count() == expected.executed.size());
        CHECK(cursor.skipped_count() == expected.skipped.size());
        CHECK(cursor.coverage().fraction ==
              doctest::Approx(static_cast<double>(expected.executed.size()) /
                              static_cast<double>(queue_len)));
        // Executed and skipped partition the queue.
        CHECK(expected.executed.size() + expected.skipped.size() == queue_len);
    }
}

TEST_CASE("rebuild's executed set dominates discard's on any shared trace") {
    std::mt19937_64 rng(23);
    for (int round = 0; round < 100; ++round) {
        const std::size_t queue_len = 50 + rng() % 300;
        const std::size_t batch_size = 1 + rng() % 60;
        const auto queue = numbered_queue(queue_len);
        std::set<std::string> crash_set;
        for (const std::string& id : queue) {
            if (rng() % 100 < 5) crash_set.insert(id);
        }

        const ReplayResult rebuild =
            drive_cursor(queue, batch_size, CrashStrategy::Rebuild, crash_set);
        const ReplayResult discard =
            drive_cursor(queue, batch_size, CrashStrategy::Discard, crash_set);

        const std::set<std::string> rebuild_set(rebuild.executed.begin(),
                                                rebuild.executed.end());
        for (const std::string& id : discard.executed) {
            REQUIRE(rebuild_set.count(id) == 1);
        }
    }
}

TEST_CASE("rebuild never executes a test twice") {
    std::mt19937_64 rng(31);
    for (int round = 0; round < 50; ++round) {
        const auto queue = numbered_queue(100 + rng() % 200);
        std::set<std::string> crash_set;
        for (const std::string& id : queue) {
            if (rng() % 100 < 10) crash_set.insert(id);
        }
        const ReplayResult rebuild = drive_cursor(
            queue, 1 + rng() % 40, CrashStrategy::Rebuild, crash_set);
        std::set<std::string> seen(rebuild.executed.begin(),
                                   rebuild.executed.end());
        CHECK(seen.size() == rebuild.executed.size());
    }
}

TEST_CASE("coverage arithmetic matches the 92.7% example") {
    const auto stats = coverage(5008, 5401 - 5008, 5401);
    CHECK(std::abs(stats.fraction * 100.0 - 92.7) <= 0.05);
    CHECK(coverage(5401, 0, 5401).fraction == doctest::Approx(1.0));
}

TEST_CASE("strategy names parse both ways") {
    CHECK(strategy_from_string("DISCARD") == CrashStrategy::Discard);
    CHECK(strategy_from_string("rebuild") == CrashStrategy::Rebuild);
    CHECK(std::string(to_string(CrashStrategy::Discard)) == "DISCARD");
    CHECK(std::string(to_string(CrashStrategy::Rebuild)) == "REBUILD");
    CHECK_THROWS_AS(strategy_from_string("RETRY"), ConfigError);
}
