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
#include <string>
#include <vector>

#include "compatlab/registry.hpp"

namespace compatlab {

/// What to do with the rest of a batch when a test crashes the runner.
///
/// Discard skips the remaining tests of the crashed batch and resumes at
/// the next fixed batch boundary. Rebuild re-batches the unexecuted tests
/// starting right after the crash point, so nothing is lost.
enum class CrashStrategy {
    Discard,
    Rebuild,
};

const char* to_string(CrashStrategy strategy);
CrashStrategy strategy_from_string(const std::string& name);

/// Per-device test queues. Within a cluster every test id lands on exactly
/// `redundancy` member devices and queue lengths differ by at most one.
struct Assignment {
    std::map<DeviceId, std::vector<std::string>> queues;
};

/// Distributes `tests` round-robin over each cluster's members, in test
/// order, starting at member 0. Each cluster receives the whole list;
/// each test is placed on `redundancy` distinct devices per cluster.
/// Throws ConfigError if redundancy exceeds some cluster size.
Assignment allocate(const std::vector<std::string>& tests,
                    const std::vector<DeviceCluster>& clusters,
                    int redundancy = 1);

/// Reported by a client when the runner died mid-batch. `crashed_at` is
/// the 0-based offset, within the batch, of the test that crashed.
struct CrashReport {
    std::int64_t batch_index = 0;
    std::int64_t crashed_at = 0;

    bool operator==(const CrashReport&) const = default;
};

/// One dispatched batch: a contiguous slice of the device's queue.
struct Batch {
    std::int64_t index = 0;       // 0-based issue counter
    std::size_t queue_start = 0;  // offset of the slice in the queue
    std::vector<std::string> test_ids;
};

struct BatchOutcome {
    /// Next batch to run, or empty when the queue is exhausted (DONE).
    std::optional<Batch> batch;
    /// Tests permanently skipped by this step (Discard strategy only).
    std::vector<std::string> skipped;
};

struct CoverageStats {
    std::size_t executed = 0;
    std::size_t skipped = 0;
    std::size_t queue_length = 0;
    double fraction = 0.0;  // executed / queue_length (1.0 for empty queues)
};

/// Serves one device's queue in batches under a crash strategy.
///
/// A test counts as executed once it was invoked, crash or not. Skipped
/// tests (Discard remainder) never count. Under Rebuild the unexecuted
/// remainder is re-batched immediately after the crash point, so every
/// test executes exactly once.
class DispatchCursor {
public:
    DispatchCursor() = default;
    DispatchCursor(std::vector<std::string> queue, CrashStrategy strategy,
                   std::size_t batch_size);

    /// Settles the previously issued batch (fully executed, or partially
    /// per `last_crash`) and returns the next batch, or DONE.
    ///
    /// Throws ProtocolError when a crash report does not reference the
    /// currently outstanding batch or its offset is out of range; the
    /// cursor is unchanged in that case.
    BatchOutcome next_batch(const std::optional<CrashReport>& last_crash);

    /// Settles the outstanding batch without issuing the next one, for
    /// exchanges that must not hand out work (e.g. bundle sync steps).
    /// Returns the tests permanently skipped by this step.
    std::vector<std::string> settle_outstanding(
        const std::optional<CrashReport>& last_crash);

    /// True once the queue is exhausted and the final batch settled.
    bool done() const;

    std::size_t position() const { return position_; }
    CrashStrategy strategy() const { return strategy_; }
    std::size_t batch_size() const { return batch_size_; }
    std::size_t queue_length() const { return queue_.size(); }
    const std::vector<std::string>& queue() const { return queue_; }

    /// Issue counter of the most recently issued batch, or -1.
    std::int64_t current_batch_index() const;
    /// Length of the most recently issued, not yet settled batch (0 if none).
    std::size_t outstanding_length() const;

    std::size_t executed_count() const { return executed_; }
    std::size_t skipped_count() const { return skipped_; }
    /// Tests that were re-dispatched by Rebuild after crashes.
    std::size_t rebuilt_count() const { return rebuilt_; }

    CoverageStats coverage() const;

private:
    struct Issued {
        std::int64_t index;
        std::size_t start;
        std::size_t length;
    };

    std::vector<std::string> settle(const std::optional<CrashReport>& crash);

    std::vector<std::string> queue_;
    CrashStrategy strategy_ = CrashStrategy::Discard;
    std::size_t batch_size_ = 1;
    std::size_t position_ = 0;
    std::optional<Issued> outstanding_;
    std::int64_t next_index_ = 0;
    std::size_t executed_ = 0;
    std::size_t skipped_ = 0;
    std::size_t rebuilt_ = 0;
};

/// Coverage from raw counters, as reported in campaign tables.
CoverageStats coverage(std::size_t executed, std::size_t skipped,
                       std::size_t queue_length);

}  // namespace compatlab
