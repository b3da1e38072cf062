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

#include "compatlab/scheduler.hpp"

#include <algorithm>

#include "compatlab/error.hpp"

namespace compatlab {

const char* to_string(CrashStrategy strategy) {
    switch (strategy) {
        case CrashStrategy::Discard:
            return "DISCARD";
        case CrashStrategy::Rebuild:
            return "REBUILD";
    }
    return "DISCARD";
}

CrashStrategy strategy_from_string(const std::string& name) {
    if (name == "discard" || name == "DISCARD") return CrashStrategy::Discard;
    if (name == "rebuild" || name == "REBUILD") return CrashStrategy::Rebuild;
    throw ConfigError("unknown crash strategy '" + name + "'");
}

Assignment allocate(const std::vector<std::string>& tests,
                    const std::vector<DeviceCluster>& clusters,
                    int redundancy) {
    if (redundancy < 1) {
        throw ConfigError("redundancy must be >= 1");
    }
    Assignment assignment;
    for (const DeviceCluster& cluster : clusters) {
        const std::size_t members = cluster.members.size();
        if (static_cast<std::size_t>(redundancy) > members) {
            throw ConfigError("redundancy " + std::to_string(redundancy) +
                              " exceeds cluster size " +
                              std::to_string(members) + " for " +
                              cluster.key.brand + "/" + cluster.key.model);
        }
        for (const DeviceId& id : cluster.members) {
            assignment.queues.emplace(id, std::vector<std::string>{});
        }
        // Copy r of test i occupies round-robin slot i*redundancy + r, so
        // copies of one test land on distinct members and queue lengths
        // stay within one of each other.
        for (std::size_t i = 0; i < tests.size(); ++i) {
            for (int r = 0; r < redundancy; ++r) {
                const std::size_t slot =
                    i * static_cast<std::size_t>(redundancy) +
                    static_cast<std::size_t>(r);
                assignment.queues[cluster.members[slot % members]].push_back(
                    tests[i]);
            }
        }
    }
    return assignment;
}

DispatchCursor::DispatchCursor(std::vector<std::string> queue,
                               CrashStrategy strategy, std::size_t batch_size)
    : queue_(std::move(queue)), strategy_(strategy), batch_size_(batch_size) {
    if (batch_size_ == 0) {
        throw ConfigError("batch size must be >= 1");
    }
}

std::vector<std::string> DispatchCursor::settle(
    const std::optional<CrashReport>& crash) {
    std::vector<std::string> skipped;
    if (!outstanding_) {
        if (crash) {
            throw ProtocolError("crash report with no outstanding batch");
        }
        return skipped;
    }
    const Issued last = *outstanding_;
    if (!crash) {
        outstanding_.reset();
        executed_ += last.length;
        return skipped;
    }
    // Validate before mutating so a bad report leaves the cursor intact.
    if (crash->batch_index != last.index) {
        throw ProtocolError("crash report for batch " +
                            std::to_string(crash->batch_index) +
                            " but batch " + std::to_string(last.index) +
                            " is outstanding");
    }
    if (crash->crashed_at < 0 ||
        static_cast<std::size_t>(crash->crashed_at) >= last.length) {
        throw ProtocolError("crash offset " + std::to_string(crash->crashed_at) +
                            " outside batch of length " +
                            std::to_string(last.length));
    }
    outstanding_.reset();
    // The crashing test itself counts as executed; it ran and died.
    const std::size_t ran = static_cast<std::size_t>(crash->crashed_at) + 1;
    const std::size_t rest = last.length - ran;
    executed_ += ran;
    if (strategy_ == CrashStrategy::Rebuild) {
        position_ = last.start + ran;
        rebuilt_ += rest;
    } else {
        skipped_ += rest;
        skipped.assign(queue_.begin() +
                           static_cast<std::ptrdiff_t>(last.start + ran),
                       queue_.begin() +
                           static_cast<std::ptrdiff_t>(last.start + last.length));
    }
    return skipped;
}

std::vector<std::string> DispatchCursor::settle_outstanding(
    const std::optional<CrashReport>& last_crash) {
    return settle(last_crash);
}

BatchOutcome DispatchCursor::next_batch(
    const std::optional<CrashReport>& last_crash) {
    BatchOutcome outcome;
    outcome.skipped = settle(last_crash);
    if (position_ >= queue_.size()) {
        return outcome;
    }
    const std::size_t length =
        std::min(batch_size_, queue_.size() - position_);
    Batch batch;
    batch.index = next_index_++;
    batch.queue_start = position_;
    batch.test_ids.assign(
        queue_.begin() + static_cast<std::ptrdiff_t>(position_),
        queue_.begin() + static_cast<std::ptrdiff_t>(position_ + length));
    outstanding_ = Issued{batch.index, position_, length};
    position_ += length;
    outcome.batch = std::move(batch);
    return outcome;
}

bool DispatchCursor::done() const {
    return !outstanding_ && position_ >= queue_.size();
}

std::int64_t DispatchCursor::current_batch_index() const {
    if (outstanding_) return outstanding_->index;
    return next_index_ - 1;
}

std::size_t DispatchCursor::outstanding_length() const {
    return outstanding_ ? outstanding_->length : 0;
}

CoverageStats DispatchCursor::coverage() const {
    return compatlab::coverage(executed_, skipped_, queue_.size());
}

CoverageStats coverage(std::size_t executed, std::size_t skipped,
                       std::size_t queue_length) {
    CoverageStats stats;
    stats.executed = executed;
    stats.skipped = skipped;
    stats.queue_length = queue_length;
    stats.fraction =
        queue_length == 0
            ? 1.0
            : static_cast<double>(executed) / static_cast<double>(queue_length);
    return stats;
}

}  // namespace compatlab
