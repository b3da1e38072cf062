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

#include "compatlab/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <json.hpp>

#include "compatlab/error.hpp"
#include "compatlab/hash.hpp"
#include "compatlab/json_io.hpp"

namespace compatlab {

const char* message_kind(const Message& message) {
    struct Visitor {
        const char* operator()(const RegisterRequest&) { return "REGISTER"; }
        const char* operator()(const RegisteredReply&) { return "REGISTERED"; }
        const char* operator()(const BatchRequest&) { return "BATCH_REQUEST"; }
        const char* operator()(const BatchReply&) { return "BATCH_RESPONSE"; }
        const char* operator()(const DoneReply&) { return "DONE"; }
        const char* operator()(const ResultsUpload&) { return "RESULTS"; }
        const char* operator()(const AckReply&) { return "ACK"; }
        const char* operator()(const ErrorReply&) { return "ERROR"; }
    };
    return std::visit(Visitor{}, message);
}

std::string encode_message(const Message& message) {
    nlohmann::json j;
    j["kind"] = message_kind(message);
    struct Visitor {
        nlohmann::json& j;
        void operator()(const RegisterRequest& m) {
            j["protocol_version"] = kProtocolVersion;
            j["profile"] = m.profile;
        }
        void operator()(const RegisteredReply& m) {
            j["device_id"] = m.device_id;
        }
        void operator()(const BatchRequest& m) {
            j["protocol_version"] = kProtocolVersion;
            j["device_id"] = m.device_id;
            j["cursor_position"] = m.cursor_position;
            j["bundle_version"] = m.bundle_version;
            if (m.crash) j["crash"] = *m.crash;
        }
        void operator()(const BatchReply& m) {
            j["manifest"] = m.manifest;
            if (m.patch) j["patch"] = *m.patch;
            j["batch_index"] = m.batch_index;
        }
        void operator()(const DoneReply&) {}
        void operator()(const ResultsUpload& m) {
            j["protocol_version"] = kProtocolVersion;
            j["device_id"] = m.device_id;
            j["batch_index"] = m.batch_index;
            j["results"] = m.results;
        }
        void operator()(const AckReply& m) {
            j["accepted_count"] = m.accepted_count;
        }
        void operator()(const ErrorReply& m) {
            j["code"] = m.code;
            j["detail"] = m.detail;
            if (m.current_batch_index) {
                j["current_batch_index"] = *m.current_batch_index;
            }
        }
    };
    std::visit(Visitor{j}, message);
    return j.dump();
}

namespace {

void require_protocol_version(const nlohmann::json& j) {
    const auto it = j.find("protocol_version");
    if (it == j.end() || !it->is_number_integer() ||
        it->get<int>() != kProtocolVersion) {
        throw ProtocolError("missing or unsupported protocol_version");
    }
}

}  // namespace

Message decode_message(const std::string& payload) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("framing error: body is not JSON: ") +
                            e.what());
    }
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "REGISTER") {
            require_protocol_version(j);
            RegisterRequest m;
            j.at("profile").get_to(m.profile);
            return m;
        }
        if (kind == "REGISTERED") {
            RegisteredReply m;
            j.at("device_id").get_to(m.device_id);
            return m;
        }
        if (kind == "BATCH_REQUEST") {
            require_protocol_version(j);
            BatchRequest m;
            j.at("device_id").get_to(m.device_id);
            j.at("cursor_position").get_to(m.cursor_position);
            j.at("bundle_version").get_to(m.bundle_version);
            if (j.contains("crash") && !j.at("crash").is_null()) {
                m.crash = j.at("crash").get<CrashReport>();
            }
            return m;
        }
        if (kind == "BATCH_RESPONSE") {
            BatchReply m;
            j.at("manifest").get_to(m.manifest);
            if (j.contains("patch") && !j.at("patch").is_null()) {
                m.patch = j.at("patch").get<BundlePatch>();
            }
            j.at("batch_index").get_to(m.batch_index);
            return m;
        }
        if (kind == "DONE") {
            return DoneReply{};
        }
        if (kind == "RESULTS") {
            require_protocol_version(j);
            ResultsUpload m;
            j.at("device_id").get_to(m.device_id);
            j.at("batch_index").get_to(m.batch_index);
            j.at("results").get_to(m.results);
            return m;
        }
        if (kind == "ACK") {
            AckReply m;
            j.at("accepted_count").get_to(m.accepted_count);
            return m;
        }
        if (kind == "ERROR") {
            ErrorReply m;
            j.at("code").get_to(m.code);
            j.at("detail").get_to(m.detail);
            if (j.contains("current_batch_index") &&
                !j.at("current_batch_index").is_null()) {
                m.current_batch_index =
                    j.at("current_batch_index").get<std::int64_t>();
            }
            return m;
        }
        throw ProtocolError("unknown message kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed message: ") + e.what());
    }
}

std::string frame_message(const Message& message) {
    const std::string body = encode_message(message);
    if (body.size() > 0xffffffffu) {
        throw ProtocolError("message exceeds frame size limit");
    }
    const auto length = static_cast<std::uint32_t>(body.size());
    std::string frame;
    frame.reserve(4 + body.size());
    frame.push_back(static_cast<char>((length >> 24) & 0xff));
    frame.push_back(static_cast<char>((length >> 16) & 0xff));
    frame.push_back(static_cast<char>((length >> 8) & 0xff));
    frame.push_back(static_cast<char>(length & 0xff));
    frame += body;
    return frame;
}

Message unframe_message(const std::string& buffer, std::size_t& offset) {
    if (buffer.size() < offset + 4) {
        throw ProtocolError("framing error: truncated length prefix");
    }
    const auto byte = [&](std::size_t i) {
        return static_cast<std::uint32_t>(
            static_cast<unsigned char>(buffer[offset + i]));
    };
    const std::uint32_t length =
        (byte(0) << 24) | (byte(1) << 16) | (byte(2) << 8) | byte(3);
    if (buffer.size() < offset + 4 + length) {
        throw ProtocolError("framing error: truncated body");
    }
    const std::string body = buffer.substr(offset + 4, length);
    offset += 4 + static_cast<std::size_t>(length);
    return decode_message(body);
}

ResultStore::ResultStore(bool retain) : retain_(retain) {}

std::int64_t ResultStore::add(const std::vector<ExecutionResult>& results) {
    const std::lock_guard<std::mutex> lock(mutex_);
    std::int64_t fresh = 0;
    for (const ExecutionResult& result : results) {
        if (retain_) {
            if (!seen_
                     .emplace(result.device, result.batch_index,
                              result.test_id)
                     .second) {
                continue;  // replayed upload, already stored
            }
            records_.push_back(result);
        }
        ++fresh;
    }
    accepted_ += fresh;
    return fresh;
}

std::int64_t ResultStore::total_accepted() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return accepted_;
}

std::vector<ExecutionResult> ResultStore::sorted_results() const {
    std::vector<ExecutionResult> out;
    {
        const std::lock_guard<std::mutex> lock(mutex_);
        out = records_;
    }
    std::sort(out.begin(), out.end(),
              [](const ExecutionResult& a, const ExecutionResult& b) {
                  return std::tie(a.device, a.batch_index, a.timestamp,
                                  a.test_id) <
                         std::tie(b.device, b.batch_index, b.timestamp,
                                  b.test_id);
              });
    return out;
}

DispatchService::DispatchService(const TestBank& bank, ServiceConfig config)
    : config_(config),
      ordered_ids_(bank.ordered_ids()),
      store_(config.retain_results) {
    if (config_.batch_size == 0) {
        throw ConfigError("batch size must be >= 1");
    }
    if (config_.redundancy < 1) {
        throw ConfigError("redundancy must be >= 1");
    }
    for (const TestCase& test : bank.cases()) {
        test_api_.emplace(test.id, test.target_api);
    }
    history_.push_back(make_bundle(0, {}));
    history_.push_back(make_bundle(1, bank.cases()));
}

void DispatchService::publish_update(const std::vector<TestCase>& cases) {
    const std::lock_guard<std::mutex> lock(mutex_);
    history_.push_back(make_bundle(history_.size(), cases));
    for (const TestCase& test : cases) {
        test_api_.emplace(test.id, test.target_api);
    }
}

std::uint64_t DispatchService::bundle_version() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return history_.back().version;
}

void DispatchService::freeze() {
    const std::lock_guard<std::mutex> lock(mutex_);
    freeze_locked();
}

bool DispatchService::frozen() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    return frozen_;
}

void DispatchService::freeze_locked() {
    if (frozen_) return;
    frozen_ = true;
    const Assignment assignment = allocate(
        ordered_ids_, registry_.cluster_devices(), config_.redundancy);
    for (const auto& [device_id, queue] : assignment.queues) {
        DeviceRuntime runtime;
        runtime.cursor =
            DispatchCursor(queue, config_.strategy, config_.batch_size);
        runtimes_.emplace(device_id, std::move(runtime));
    }
}

Message DispatchService::handle(const Message& request) {
    const std::lock_guard<std::mutex> lock(mutex_);
    return handle_locked(request);
}

Message DispatchService::handle_locked(const Message& request) {
    if (const auto* reg = std::get_if<RegisterRequest>(&request)) {
        return on_register(*reg);
    }
    if (const auto* batch = std::get_if<BatchRequest>(&request)) {
        return on_batch_request(*batch);
    }
    if (const auto* results = std::get_if<ResultsUpload>(&request)) {
        return on_results(*results);
    }
    return ErrorReply{"unexpected_message",
                      std::string("service cannot handle ") +
                          message_kind(request),
                      std::nullopt};
}

Message DispatchService::on_register(const RegisterRequest& request) {
    if (frozen_) {
        return ErrorReply{"registration_closed",
                          "allocation is frozen, campaign already dispatching",
                          std::nullopt};
    }
    try {
        validate_profile(request.profile);
    } catch (const ValidationError& e) {
        return ErrorReply{"invalid_profile", e.what(), std::nullopt};
    }
    return RegisteredReply{registry_.register_device(request.profile)};
}

std::optional<BundlePatch> DispatchService::patch_for(
    std::uint64_t client_version) const {
    const std::uint64_t current = history_.back().version;
    if (client_version >= current) return std::nullopt;
    // One step toward current per response; version indexes the history.
    return diff(history_[client_version], history_[client_version + 1]);
}

Message DispatchService::on_batch_request(const BatchRequest& request) {
    if (!frozen_) {
        freeze_locked();
    }
    const auto it = runtimes_.find(request.device_id);
    if (it == runtimes_.end()) {
        return ErrorReply{"unknown_device",
                          "device '" + request.device_id +
                              "' is not registered",
                          std::nullopt};
    }
    DeviceRuntime& runtime = it->second;
    const std::string encoded = encode_message(request);
    if (encoded == runtime.last_request) {
        return decode_message(runtime.last_response);  // replayed request
    }
    if (request.bundle_version > history_.back().version) {
        return ErrorReply{"unknown_bundle_version",
                          "client bundle version " +
                              std::to_string(request.bundle_version) +
                              " is ahead of the service",
                          std::nullopt};
    }

    const auto synthesize_skips = [&](const std::vector<std::string>& ids) {
        if (ids.empty()) return;
        // Discard: the rest of the crashed batch is never executed.
        std::vector<ExecutionResult> skipped;
        skipped.reserve(ids.size());
        for (const std::string& test_id : ids) {
            ExecutionResult record;
            record.test_id = test_id;
            const auto api = test_api_.find(test_id);
            record.target_api =
                api == test_api_.end() ? std::string{} : api->second;
            record.device = request.device_id;
            record.outcome = OutcomeKind::SkippedCrash;
            record.batch_index = request.crash
                                     ? request.crash->batch_index
                                     : runtime.cursor.current_batch_index();
            record.timestamp = runtime.last_result_tick;
            skipped.push_back(std::move(record));
        }
        store_.add(skipped);
    };

    Message response = DoneReply{};
    try {
        //  A client more than one version behind cannot execute what we
        //  would send, so the reply carries one patch step and no work;
        //  the outstanding batch is still settled here, exactly once.
        if (request.bundle_version + 1 < history_.back().version) {
            synthesize_skips(runtime.cursor.settle_outstanding(request.crash));
            BatchReply reply;
            reply.batch_index = -1;
            reply.patch = patch_for(request.bundle_version);
            response = reply;
        } else {
            BatchOutcome outcome = runtime.cursor.next_batch(request.crash);
            synthesize_skips(outcome.skipped);
            if (outcome.batch) {
                BatchReply reply;
                reply.manifest = outcome.batch->test_ids;
                reply.batch_index = outcome.batch->index;
                reply.patch = patch_for(request.bundle_version);
                runtime.last_manifest = reply.manifest;
                response = reply;
            } else {
                response = DoneReply{};
            }
        }
    } catch (const ProtocolError& e) {
        return ErrorReply{"bad_crash_report", e.what(),
                          runtime.cursor.current_batch_index()};
    }
    runtime.last_request = encoded;
    runtime.last_response = encode_message(response);
    return response;
}

Message DispatchService::on_results(const ResultsUpload& request) {
    const auto it = runtimes_.find(request.device_id);
    if (!frozen_ || it == runtimes_.end()) {
        return ErrorReply{"unknown_device",
                          "device '" + request.device_id +
                              "' has no active queue",
                          std::nullopt};
    }
    DeviceRuntime& runtime = it->second;
    const std::int64_t current = runtime.cursor.current_batch_index();
    if (request.batch_index != current) {
        return ErrorReply{"stale_batch",
                          "results for batch " +
                              std::to_string(request.batch_index) +
                              " but batch " + std::to_string(current) +
                              " is current",
                          current};
    }
    for (const ExecutionResult& result : request.results) {
        if (result.device != request.device_id) {
            return ErrorReply{"device_mismatch",
                              "result for '" + result.device +
                                  "' in upload from '" + request.device_id +
                                  "'",
                              std::nullopt};
        }
    }
    const std::int64_t fresh = store_.add(request.results);
    for (const ExecutionResult& result : request.results) {
        runtime.last_result_tick =
            std::max(runtime.last_result_tick, result.timestamp);
    }
    return AckReply{fresh};
}

bool DispatchService::all_done() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    if (!frozen_) return false;
    for (const auto& [id, runtime] : runtimes_) {
        if (!runtime.cursor.done()) return false;
    }
    return true;
}

std::map<DeviceId, CoverageStats> DispatchService::coverage() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    std::map<DeviceId, CoverageStats> out;
    for (const auto& [id, runtime] : runtimes_) {
        out.emplace(id, runtime.cursor.coverage());
    }
    return out;
}

std::map<DeviceId, std::size_t> DispatchService::rebuilt_counts() const {
    const std::lock_guard<std::mutex> lock(mutex_);
    std::map<DeviceId, std::size_t> out;
    for (const auto& [id, runtime] : runtimes_) {
        out.emplace(id, runtime.cursor.rebuilt_count());
    }
    return out;
}

InProcessChannel::InProcessChannel(DispatchService& service,
                                   double failure_rate, std::uint64_t seed)
    : service_(service), failure_rate_(failure_rate), seed_(seed) {}

Message InProcessChannel::request(const Message& message) {
    const std::uint64_t attempt = attempts_++;
    if (failure_rate_ > 0.0) {
        const std::string key = "xfer:" + std::to_string(attempt);
        if (keyed_uniform(key, seed_) < failure_rate_) {
            throw TransportError("injected transport failure on attempt " +
                                 std::to_string(attempt));
        }
    }
    return service_.handle(message);
}

namespace {

void send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent,
#ifdef MSG_NOSIGNAL
                                 MSG_NOSIGNAL
#else
                                 0
#endif
        );
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("send failed: ") +
                                 std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
}

/// Reads exactly n bytes; empty optional on clean EOF at a boundary.
std::optional<std::string> recv_exact(int fd, std::size_t n) {
    std::string data(n, '\0');
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, data.data() + got, n - got, 0);
        if (r == 0) {
            if (got == 0) return std::nullopt;
            throw ProtocolError("framing error: connection closed mid-frame");
        }
        if (r < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("recv failed: ") +
                                 std::strerror(errno));
        }
        got += static_cast<std::size_t>(r);
    }
    return data;
}

std::optional<Message> read_frame(int fd) {
    const auto prefix = recv_exact(fd, 4);
    if (!prefix) return std::nullopt;
    const auto byte = [&](std::size_t i) {
        return static_cast<std::uint32_t>(
            static_cast<unsigned char>((*prefix)[i]));
    };
    const std::uint32_t length =
        (byte(0) << 24) | (byte(1) << 16) | (byte(2) << 8) | byte(3);
    const auto body = recv_exact(fd, length);
    if (!body) {
        throw ProtocolError("framing error: connection closed mid-frame");
    }
    return decode_message(*body);
}

}  // namespace

TcpServer::TcpServer(DispatchService& service, std::uint16_t port)
    : service_(service) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        throw TransportError(std::string("socket failed: ") +
                             std::strerror(errno));
    }
    const int enable = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &enable,
                 sizeof(enable));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr),
               sizeof(addr)) < 0) {
        ::close(listen_fd_);
        throw TransportError(std::string("bind failed: ") +
                             std::strerror(errno));
    }
    socklen_t len = sizeof(addr);
    if (::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len) <
        0) {
        ::close(listen_fd_);
        throw TransportError(std::string("getsockname failed: ") +
                             std::strerror(errno));
    }
    port_ = ntohs(addr.sin_port);
    if (::listen(listen_fd_, 64) < 0) {
        ::close(listen_fd_);
        throw TransportError(std::string("listen failed: ") +
                             std::strerror(errno));
    }
    accept_thread_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
    if (stopping_.exchange(true)) return;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    if (accept_thread_.joinable()) {
        accept_thread_.join();
    }
    std::vector<std::thread> workers;
    {
        const std::lock_guard<std::mutex> lock(workers_mutex_);
        workers.swap(workers_);
    }
    for (std::thread& worker : workers) {
        if (worker.joinable()) worker.join();
    }
}

void TcpServer::accept_loop() {
    for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (stopping_) return;
            if (errno == EINTR) continue;
            return;
        }
        const std::lock_guard<std::mutex> lock(workers_mutex_);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TcpServer::serve_connection(int fd) {
    for (;;) {
        Message reply = ErrorReply{"protocol_error", "", std::nullopt};
        try {
            const auto request = read_frame(fd);
            if (!request) break;  // client hung up cleanly
            reply = service_.handle(*request);
        } catch (const ProtocolError& e) {
            reply = ErrorReply{"protocol_error", e.what(), std::nullopt};
        } catch (const TransportError&) {
            break;
        }
        try {
            send_all(fd, frame_message(reply));
        } catch (const TransportError&) {
            break;
        }
    }
    ::close(fd);
}

TcpChannel::TcpChannel(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) {
        throw TransportError(std::string("socket failed: ") +
                             std::strerror(errno));
    }
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host == "localhost" || host.empty()) {
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        throw TransportError("unsupported host '" + host +
                             "', use a dotted IPv4 address");
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
        0) {
        ::close(fd_);
        fd_ = -1;
        throw TransportError(std::string("connect failed: ") +
                             std::strerror(errno));
    }
}

TcpChannel::~TcpChannel() {
    if (fd_ >= 0) ::close(fd_);
}

Message TcpChannel::request(const Message& message) {
    send_all(fd_, frame_message(message));
    const auto reply = read_frame(fd_);
    if (!reply) {
        throw TransportError("connection closed before reply");
    }
    return *reply;
}

}  // namespace compatlab
