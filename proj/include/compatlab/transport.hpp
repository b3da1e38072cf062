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

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include "compatlab/bundler.hpp"
#include "compatlab/registry.hpp"
#include "compatlab/results.hpp"
#include "compatlab/scheduler.hpp"
#include "compatlab/testbank.hpp"

namespace compatlab {

inline constexpr int kProtocolVersion = 1;

/// Requests carry protocol_version on the wire; replies do not.
struct RegisterRequest {
    DeviceProfile profile;

    bool operator==(const RegisterRequest&) const = default;
};

struct RegisteredReply {
    DeviceId device_id;

    bool operator==(const RegisteredReply&) const = default;
};

struct BatchRequest {
    DeviceId device_id;
    /// Client's executed-test count. Informational echo; the server-side
    /// cursor is authoritative.
    std::int64_t cursor_position = 0;
    std::uint64_t bundle_version = 0;
    std::optional<CrashReport> crash;

    bool operator==(const BatchRequest&) const = default;
};

struct BatchReply {
    /// Ordered test ids to execute. Empty when the reply only carries a
    /// bundle patch (client was more than one version behind).
    std::vector<std::string> manifest;
    /// One version step toward the server's current bundle, absent when
    /// the client is already current.
    std::optional<BundlePatch> patch;
    std::int64_t batch_index = 0;  // -1 on a patch-only reply

    bool operator==(const BatchReply&) const = default;
};

struct DoneReply {
    bool operator==(const DoneReply&) const = default;
};

struct ResultsUpload {
    DeviceId device_id;
    std::int64_t batch_index = 0;
    std::vector<ExecutionResult> results;

    bool operator==(const ResultsUpload&) const = default;
};

struct AckReply {
    std::int64_t accepted_count = 0;

    bool operator==(const AckReply&) const = default;
};

/// Protocol-level rejection. `current_batch_index` lets a confused client
/// resynchronize after uploading results for a stale batch.
struct ErrorReply {
    std::string code;
    std::string detail;
    std::optional<std::int64_t> current_batch_index;

    bool operator==(const ErrorReply&) const = default;
};

using Message =
    std::variant<RegisterRequest, RegisteredReply, BatchRequest, BatchReply,
                 DoneReply, ResultsUpload, AckReply, ErrorReply>;

const char* message_kind(const Message& message);

/// Canonical encoding: one JSON object, keys sorted, no insignificant
/// whitespace. decode(encode(m)) == m for every message.
std::string encode_message(const Message& message);
Message decode_message(const std::string& payload);

/// 4-byte big-endian length prefix + UTF-8 JSON body.
std::string frame_message(const Message& message);
/// Parses one frame starting at `offset`, which is advanced past it.
/// Throws ProtocolError on a truncated or garbled frame.
Message unframe_message(const std::string& buffer, std::size_t& offset);

/// Synchronous request/reply transport between a client and the service.
class Channel {
public:
    virtual ~Channel() = default;
    virtual Message request(const Message& message) = 0;
};

/// Collects execution results. Retaining mode deduplicates by
/// (device, batch_index, test_id) so replayed uploads change nothing;
/// counting mode keeps totals only, for bulk strategy sweeps.
class ResultStore {
public:
    explicit ResultStore(bool retain = true);

    /// Returns the number of newly stored records.
    std::int64_t add(const std::vector<ExecutionResult>& results);

    std::int64_t total_accepted() const;
    /// Stored records sorted by (device, batch_index, timestamp, test_id).
    std::vector<ExecutionResult> sorted_results() const;
    bool retains() const { return retain_; }

private:
    mutable std::mutex mutex_;
    bool retain_;
    std::int64_t accepted_ = 0;
    std::vector<ExecutionResult> records_;
    std::set<std::tuple<DeviceId, std::int64_t, std::string>> seen_;
};

struct ServiceConfig {
    CrashStrategy strategy = CrashStrategy::Discard;
    std::size_t batch_size = 100;
    int redundancy = 1;
    bool retain_results = true;
};

/// The dispatch service: binds the device registry, the per-device batch
/// cursors and the bundle history behind the message protocol. handle()
/// is safe to call from concurrent device sessions.
class DispatchService {
public:
    DispatchService(const TestBank& bank, ServiceConfig config);

    Message handle(const Message& request);

    /// Closes registration and fixes the per-device queues. Implicit on
    /// the first BATCH_REQUEST.
    void freeze();
    bool frozen() const;

    /// Publishes a new bundle version containing exactly `cases`.
    /// Dispatch order of the queues is not changed; only clients' local
    /// bundles are brought forward via patches.
    void publish_update(const std::vector<TestCase>& cases);

    const DeviceRegistry& registry() const { return registry_; }
    ResultStore& results() { return store_; }
    const ResultStore& results() const { return store_; }
    std::uint64_t bundle_version() const;

    bool all_done() const;
    std::map<DeviceId, CoverageStats> coverage() const;
    /// Tests re-dispatched after crashes (Rebuild), per device.
    std::map<DeviceId, std::size_t> rebuilt_counts() const;

private:
    struct DeviceRuntime {
        DispatchCursor cursor;
        std::vector<std::string> last_manifest;
        std::int64_t last_result_tick = 0;
        std::string last_request;  // replay guard for at-least-once retries
        std::string last_response;
    };

    Message handle_locked(const Message& request);
    Message on_register(const RegisterRequest& request);
    Message on_batch_request(const BatchRequest& request);
    Message on_results(const ResultsUpload& request);
    void freeze_locked();
    std::optional<BundlePatch> patch_for(std::uint64_t client_version) const;

    mutable std::mutex mutex_;
    ServiceConfig config_;
    std::vector<std::string> ordered_ids_;
    std::map<std::string, std::string> test_api_;
    std::vector<TestBundle> history_;  // index = version, [0] empty
    DeviceRegistry registry_;
    bool frozen_ = false;
    std::map<DeviceId, DeviceRuntime> runtimes_;
    ResultStore store_;
};

/// Zero-copy channel that calls the service directly. Optional failure
/// injection throws TransportError on a seeded fraction of requests, for
/// retry-path tests; the request is not delivered when that happens.
class InProcessChannel : public Channel {
public:
    explicit InProcessChannel(DispatchService& service,
                              double failure_rate = 0.0,
                              std::uint64_t seed = 0);

    Message request(const Message& message) override;

private:
    DispatchService& service_;
    double failure_rate_;
    std::uint64_t seed_;
    std::uint64_t attempts_ = 0;
};

/// TCP endpoint speaking the framed protocol, one thread per connection.
class TcpServer {
public:
    /// Binds 127.0.0.1:port; port 0 picks a free port.
    TcpServer(DispatchService& service, std::uint16_t port);
    ~TcpServer();

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    std::uint16_t port() const { return port_; }
    void stop();

private:
    void accept_loop();
    void serve_connection(int fd);

    DispatchService& service_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
};

/// Client side of the framed TCP protocol. One connection per channel.
class TcpChannel : public Channel {
public:
    TcpChannel(const std::string& host, std::uint16_t port);
    ~TcpChannel();

    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    Message request(const Message& message) override;

private:
    int fd_ = -1;
};

}  // namespace compatlab
