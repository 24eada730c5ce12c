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

#include "recycle/transport.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "recycle/errors.hpp"

namespace recycle {

std::string service_kind_name(ServiceKind kind) {
    switch (kind) {
        case ServiceKind::kRephrase: return "rephrase";
        case ServiceKind::kScoreDataMan: return "score_dataman";
        case ServiceKind::kJudgeStructure: return "judge_structure";
        case ServiceKind::kEmbed: return "embed";
        case ServiceKind::kClassify: return "classify";
    }
    return "rephrase";
}

ServiceKind parse_service_kind(const std::string& name) {
    for (auto k : {ServiceKind::kRephrase, ServiceKind::kScoreDataMan, ServiceKind::kJudgeStructure,
                   ServiceKind::kEmbed, ServiceKind::kClassify})
        if (service_kind_name(k) == name) return k;
    throw ConfigError("unknown service kind '" + name + "'");
}

std::string transport_name(TransportKind kind) {
    return kind == TransportKind::kHttpJson ? "http-json" : "stdio-lines";
}

TransportKind parse_transport(const std::string& name) {
    if (name == "http-json") return TransportKind::kHttpJson;
    if (name == "stdio-lines") return TransportKind::kStdioLines;
    throw ConfigError("unknown transport '" + name + "' (expected http-json or stdio-lines)");
}

nlohmann::json GenerationParams::to_json() const {
    return {{"temperature", temperature}, {"top_p", top_p}, {"max_tokens", max_tokens}};
}

GenerationParams GenerationParams::from_json(const nlohmann::json& j) {
    GenerationParams p;
    try {
        p.temperature = j.value("temperature", p.temperature);
        p.top_p = j.value("top_p", p.top_p);
        p.max_tokens = j.value("max_tokens", p.max_tokens);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("generation params: ") + e.what());
    }
    if (p.max_tokens == 0) throw ConfigError("params.max_tokens must be >= 1");
    if (!(p.top_p > 0.0 && p.top_p <= 1.0)) throw ConfigError("params.top_p must lie in (0, 1]");
    if (!(p.temperature >= 0.0)) throw ConfigError("params.temperature must be >= 0");
    return p;
}

void ServiceEndpoint::validate() const {
    if (address.empty()) throw ConfigError("endpoint " + service_kind_name(kind) + ": address is empty");
    if (timeout_ms <= 0) throw ConfigError("endpoint " + service_kind_name(kind) + ": timeout must be > 0");
    if (max_inflight < 1) throw ConfigError("endpoint " + service_kind_name(kind) + ": max_inflight must be >= 1");
    if (attempts < 1) throw ConfigError("endpoint " + service_kind_name(kind) + ": attempts must be >= 1");
    if (backoff_ms < 0) throw ConfigError("endpoint " + service_kind_name(kind) + ": backoff must be >= 0");
}

nlohmann::json ServiceEndpoint::to_json() const {
    return {{"kind", service_kind_name(kind)}, {"transport", transport_name(transport)},
            {"address", address},              {"timeout_ms", timeout_ms},
            {"max_inflight", max_inflight},    {"attempts", attempts},
            {"backoff_ms", backoff_ms},        {"params", params.to_json()}};
}

ServiceEndpoint ServiceEndpoint::from_json(const nlohmann::json& j) {
    ServiceEndpoint e;
    try {
        e.kind = parse_service_kind(j.at("kind").get<std::string>());
        e.transport = parse_transport(j.value("transport", std::string{"http-json"}));
        e.address = j.value("address", std::string{});
        e.timeout_ms = j.value("timeout_ms", e.timeout_ms);
        e.max_inflight = j.value("max_inflight", e.max_inflight);
        e.attempts = j.value("attempts", e.attempts);
        e.backoff_ms = j.value("backoff_ms", e.backoff_ms);
        if (j.contains("params")) e.params = GenerationParams::from_json(j["params"]);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("endpoint: ") + ex.what());
    }
    e.validate();
    return e;
}

nlohmann::json make_request(ServiceKind kind, const std::string& prompt, const GenerationParams& params) {
    return {{"kind", service_kind_name(kind)}, {"prompt", prompt}, {"params", params.to_json()}};
}

// --- HTTP -------------------------------------------------------------------

HttpJsonClient::HttpJsonClient(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0)
        throw ConfigError("http-json address must start with http://, got '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

nlohmann::json HttpJsonClient::call(const nlohmann::json& request, std::chrono::milliseconds timeout) {
    httplib::Client cli(scheme_host_port_);
    const auto secs = static_cast<time_t>(timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    auto res = cli.Post(path_, request.dump(), "application/json");
    if (!res)
        throw ServiceError("POST " + scheme_host_port_ + path_ + " failed: " + httplib::to_string(res.error()));
    try {
        auto body = nlohmann::json::parse(res->body);
        if (res->status != 200 && !(body.is_object() && body.contains("error")))
            throw ServiceError("POST " + scheme_host_port_ + path_ + " returned HTTP " +
                               std::to_string(res->status));
        return body;
    } catch (const nlohmann::json::parse_error&) {
        throw ServiceError("POST " + scheme_host_port_ + path_ + " returned non-JSON body (HTTP " +
                           std::to_string(res->status) + ")");
    }
}

bool HttpJsonClient::probe(std::chrono::milliseconds timeout) {
    httplib::Client cli(scheme_host_port_);
    const auto secs = static_cast<time_t>(timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    auto res = cli.Get("/health");
    return res && res->status == 200;
}

// --- stdio ------------------------------------------------------------------

struct StdioClient::Process {
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::string buffer;

    ~Process() {
        if (to_child >= 0) ::close(to_child);
        if (from_child >= 0) ::close(from_child);
        if (pid > 0) {
            for (int i = 0; i < 20; ++i) {
                if (::waitpid(pid, nullptr, WNOHANG) == pid) return;
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
            }
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
        }
    }

    void kill_now() {
        if (pid > 0) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            pid = -1;
        }
    }
};

StdioClient::StdioClient(std::string command) : command_(std::move(command)) {
    if (command_.empty()) throw ConfigError("stdio-lines address (command line) is empty");
    // A worker that exits mid-request must surface as an error, not kill us.
    ::signal(SIGPIPE, SIG_IGN);
}

StdioClient::~StdioClient() = default;

std::unique_ptr<StdioClient::Process> StdioClient::acquire() {
    {
        std::lock_guard lock(mutex_);
        if (!idle_.empty()) {
            auto p = std::move(idle_.back());
            idle_.pop_back();
            return p;
        }
    }
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw ServiceError("pipe2 failed: " + std::string(std::strerror(errno)));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw ServiceError("pipe2 failed: " + std::string(std::strerror(errno)));
    }
    const char* cmd = command_.c_str();
    const pid_t pid = ::fork();
    if (pid < 0) throw ServiceError("fork failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", cmd, static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    auto p = std::make_unique<Process>();
    p->pid = pid;
    p->to_child = in_pipe[1];
    p->from_child = out_pipe[0];
    ++started_;
    return p;
}

void StdioClient::release(std::unique_ptr<Process> p) {
    std::lock_guard lock(mutex_);
    idle_.push_back(std::move(p));
}

nlohmann::json StdioClient::call(const nlohmann::json& request, std::chrono::milliseconds timeout) {
    auto proc = acquire();
    const std::string line = request.dump() + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
        const auto n = ::write(proc->to_child, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            proc->kill_now();
            throw ServiceError("stdio service '" + command_ + "' closed its input");
        }
        written += static_cast<std::size_t>(n);
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        const auto nl = proc->buffer.find('\n');
        if (nl != std::string::npos) {
            std::string reply = proc->buffer.substr(0, nl);
            proc->buffer.erase(0, nl + 1);
            release(std::move(proc));
            try {
                return nlohmann::json::parse(reply);
            } catch (const nlohmann::json::parse_error&) {
                throw ServiceError("stdio service '" + command_ + "' replied with non-JSON line");
            }
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            proc->kill_now();
            throw ServiceError("stdio service '" + command_ + "' timed out");
        }
        pollfd pfd{proc->from_child, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (ready < 0 && errno == EINTR) continue;
        if (ready <= 0) continue;
        char buf[4096];
        const auto n = ::read(proc->from_child, buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            proc->kill_now();
            throw ServiceError("stdio service '" + command_ + "' exited before replying");
        }
        proc->buffer.append(buf, static_cast<std::size_t>(n));
    }
}

// --- replay / recording -----------------------------------------------------

ReplayClient::ReplayClient(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open recorded responses '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            responses_[j.at("request").dump()] = j.at("response");
        } catch (const nlohmann::json::exception&) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": not a recorded exchange", line);
        }
    }
}

nlohmann::json ReplayClient::call(const nlohmann::json& request, std::chrono::milliseconds) {
    auto it = responses_.find(request.dump());
    if (it == responses_.end()) throw ServiceError("no recorded response for request");
    return it->second;
}

RecordingClient::RecordingClient(std::unique_ptr<ServiceClient> inner, std::string path)
    : inner_(std::move(inner)), path_(std::move(path)) {}

nlohmann::json RecordingClient::call(const nlohmann::json& request, std::chrono::milliseconds timeout) {
    auto response = inner_->call(request, timeout);
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to '" + path_ + "'");
    out << nlohmann::json{{"request", request}, {"response", response}}.dump() << '\n';
    return response;
}

std::unique_ptr<ServiceClient> make_client(const ServiceEndpoint& endpoint) {
    endpoint.validate();
    if (endpoint.transport == TransportKind::kHttpJson)
        return std::make_unique<HttpJsonClient>(endpoint.address);
    return std::make_unique<StdioClient>(endpoint.address);
}

// --- session ----------------------------------------------------------------

Session::Session(ServiceEndpoint endpoint, std::unique_ptr<ServiceClient> client)
    : endpoint_(std::move(endpoint)),
      client_(std::move(client)),
      slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(endpoint_.max_inflight, 1))) {
    if (endpoint_.max_inflight < 1) throw ConfigError("max_inflight must be >= 1");
    if (!client_) throw ConfigError("session needs a client");
}

Session::Session(ServiceEndpoint endpoint) : Session(endpoint, make_client(endpoint)) {}

nlohmann::json Session::request_for(const std::string& prompt) const {
    return make_request(endpoint_.kind, prompt, endpoint_.params);
}

CallResult Session::call(const nlohmann::json& request) {
    CallResult result;
    const auto attempts = std::max<std::size_t>(endpoint_.attempts, 1);
    auto backoff = std::chrono::milliseconds(endpoint_.backoff_ms);
    for (std::size_t attempt = 1; attempt <= attempts; ++attempt) {
        result.attempts = attempt;
        slots_.acquire();
        const auto now = ++inflight_;
        auto peak = peak_.load();
        while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
        }
        try {
            auto reply = client_->call(request, std::chrono::milliseconds(endpoint_.timeout_ms));
            --inflight_;
            slots_.release();
            if (reply.is_object() && reply.contains("error")) {
                result.error = reply["error"].is_string() ? reply["error"].get<std::string>()
                                                          : reply["error"].dump();
            } else if (!reply.is_object()) {
                result.error = "reply is not a JSON object";
            } else {
                result.response = std::move(reply);
                result.error.clear();
                return result;
            }
        } catch (const Error& e) {
            --inflight_;
            slots_.release();
            result.error = e.what();
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    return result;
}

std::vector<CallResult> Session::call_all(const std::vector<nlohmann::json>& requests) {
    std::vector<CallResult> results(requests.size());
    if (requests.empty()) return results;
    const std::size_t workers = std::min(endpoint_.max_inflight, requests.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) results[i] = call(requests[i]);
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace recycle
