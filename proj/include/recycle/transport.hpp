/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "json.hpp"

namespace recycle {

enum class ServiceKind { kRephrase, kScoreDataMan, kJudgeStructure, kEmbed, kClassify };
enum class TransportKind { kHttpJson, kStdioLines };

std::string service_kind_name(ServiceKind kind);
ServiceKind parse_service_kind(const std::string& name);
std::string transport_name(TransportKind kind);
TransportKind parse_transport(const std::string& name);

struct GenerationParams {
    double temperature = 1.0;
    double top_p = 0.9;
    std::size_t max_tokens = 2048;

    nlohmann::json to_json() const;
    static GenerationParams from_json(const nlohmann::json& j);
    friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

struct ServiceEndpoint {
    ServiceKind kind = ServiceKind::kRephrase;
    TransportKind transport = TransportKind::kHttpJson;
    /// URL for http-json, shell command line for stdio-lines.
    std::string address;
    int timeout_ms = 120000;
    std::size_t max_inflight = 8;
    std::size_t attempts = 3;
    int backoff_ms = 500;
    GenerationParams params;

    void validate() const;
    nlohmann::json to_json() const;
    static ServiceEndpoint from_json(const nlohmann::json& j);
};

/// Wire request: {"kind", "prompt", "params": {"temperature", "top_p", "max_tokens"}}.
nlohmann::json make_request(ServiceKind kind, const std::string& prompt, const GenerationParams& params);

/// One request/response exchange. Implementations must be safe to call from
/// several threads at once. Transport failures throw ServiceError; an
/// {"error": ...} reply is returned as-is.
class ServiceClient {
public:
    virtual ~ServiceClient() = default;
    virtual nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) = 0;
};

class HttpJsonClient final : public ServiceClient {
public:
    /// url: http://host[:port][/path]; the request is POSTed to path.
    explicit HttpJsonClient(const std::string& url);
    nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) override;
    /// GET <base>/health; true on HTTP 200.
    bool probe(std::chrono::milliseconds timeout);

private:
    std::string scheme_host_port_;
    std::string path_;
};

/// Line-delimited JSON over a child process's stdin/stdout. Keeps a pool of
/// worker processes, one per concurrent caller; a worker that times out or
/// dies is killed and replaced on the next call.
class StdioClient final : public ServiceClient {
public:
    explicit StdioClient(std::string command);
    ~StdioClient() override;
    StdioClient(const StdioClient&) = delete;
    StdioClient& operator=(const StdioClient&) = delete;

    nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) override;
    std::size_t processes_started() const noexcept { return started_; }

private:
    struct Process;
    std::unique_ptr<Process> acquire();
    void release(std::unique_ptr<Process> p);

    std::string command_;
    std::mutex mutex_;
    std::vector<std::unique_ptr<Process>> idle_;
    std::atomic<std::size_t> started_{0};
};

class FunctionClient final : public ServiceClient {
public:
    using Handler = std::function<nlohmann::json(const nlohmann::json&)>;
    explicit FunctionClient(Handler handler) : handler_(std::move(handler)) {}
    nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds) override {
        return handler_(request);
    }

private:
    Handler handler_;
};

/// Answers from a recorded file of {"request": ..., "response": ...} lines,
/// matched on the canonical request bytes.
class ReplayClient final : public ServiceClient {
public:
    explicit ReplayClient(const std::string& path);
    nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) override;
    std::size_t size() const noexcept { return responses_.size(); }

private:
    std::map<std::string, nlohmann::json> responses_;
};

/// Forwards to another client and appends every exchange to a file in the
/// format ReplayClient reads.
class RecordingClient final : public ServiceClient {
public:
    RecordingClient(std::unique_ptr<ServiceClient> inner, std::string path);
    nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) override;

private:
    std::unique_ptr<ServiceClient> inner_;
    std::string path_;
    std::mutex mutex_;
};

std::unique_ptr<ServiceClient> make_client(const ServiceEndpoint& endpoint);

struct CallResult {
    std::optional<nlohmann::json> response;
    std::string error;
    std::size_t attempts = 0;
    bool ok() const noexcept { return response.has_value(); }
};

/// Endpoint plus client with retry/backoff and an in-flight bound.
class Session {
public:
    Session(ServiceEndpoint endpoint, std::unique_ptr<ServiceClient> client);
    explicit Session(ServiceEndpoint endpoint);

    const ServiceEndpoint& endpoint() const noexcept { return endpoint_; }

    /// Up to endpoint.attempts tries with exponential backoff. An "error"
    /// reply or a ServiceError counts as a failed attempt.
    CallResult call(const nlohmann::json& request);

    /// Issues all requests with at most max_inflight outstanding; results are
    /// in request order.
    std::vector<CallResult> call_all(const std::vector<nlohmann::json>& requests);

    nlohmann::json request_for(const std::string& prompt) const;

    std::size_t peak_inflight() const noexcept { return peak_.load(); }

private:
    ServiceEndpoint endpoint_;
    std::unique_ptr<ServiceClient> client_;
    std::counting_semaphore<> slots_;
    std::atomic<std::size_t> inflight_{0};
    std::atomic<std::size_t> peak_{0};
};

}  // namespace recycle
