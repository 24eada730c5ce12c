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

#include "recycle/config.hpp"

#include <cctype>
#include <fstream>

#include "recycle/errors.hpp"
#include "recycle/hash.hpp"

namespace recycle {

namespace {

constexpr ServiceKind kAllKinds[] = {ServiceKind::kRephrase, ServiceKind::kScoreDataMan,
                                     ServiceKind::kJudgeStructure, ServiceKind::kEmbed,
                                     ServiceKind::kClassify};

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::uint64_t env_u64(const char* name, const char* value) {
    std::string s(value);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError(std::string(name) + ": '" + s + "' is not a nonnegative integer");
    try {
        return std::stoull(s);
    } catch (const std::out_of_range&) {
        throw ConfigError(std::string(name) + ": '" + s + "' is out of range");
    }
}

double env_real(const char* name, const char* value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != std::string(value).size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(name) + ": '" + value + "' is not a number");
    }
}

}  // namespace

void RunConfig::validate() const {
    parse_counter(counter);
    reward.validate();
    lab.validate();
    if (!(lab.reward == reward)) throw ConfigError("lab reward config must mirror the reward section");
    for (const auto& [kind, ep] : endpoints) {
        if (ep.kind != kind) throw ConfigError("endpoint registered under the wrong kind");
        ep.validate();
    }
    if (out_dir.empty()) throw ConfigError("out_dir is empty");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json eps = nlohmann::json::object();
    for (const auto& [kind, ep] : endpoints) {
        auto j = ep.to_json();
        j.erase("kind");
        eps[service_kind_name(kind)] = std::move(j);
    }
    auto grpo = lab.to_json();
    grpo.erase("reward");
    nlohmann::json filter{{"tau_org", tau_org}};
    filter["budget_tokens"] = budget_tokens ? nlohmann::json(*budget_tokens) : nlohmann::json(nullptr);
    return {{"counter", counter},   {"seed", seed},      {"parallel", parallel},
            {"filter", filter},     {"reward", reward.to_json()},
            {"grpo", grpo},         {"endpoints", eps},  {"out_dir", out_dir},
            {"judge_cache", judge_cache}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    try {
        c.counter = j.value("counter", c.counter);
        c.seed = j.value("seed", c.seed);
        c.parallel = j.value("parallel", c.parallel);
        c.out_dir = j.value("out_dir", c.out_dir);
        c.judge_cache = j.value("judge_cache", c.judge_cache);
        if (j.contains("filter")) {
            const auto& f = j["filter"];
            c.tau_org = f.value("tau_org", c.tau_org);
            if (f.contains("budget_tokens") && !f["budget_tokens"].is_null())
                c.budget_tokens = f["budget_tokens"].get<std::uint64_t>();
        }
        if (j.contains("reward")) c.reward = RewardConfig::from_json(j["reward"]);
        if (j.contains("grpo")) c.lab = grpo::LabConfig::from_json(j["grpo"]);
        c.lab.reward = c.reward;
        if (j.contains("endpoints")) {
            for (const auto& [name, body] : j["endpoints"].items()) {
                auto entry = body;
                entry["kind"] = name;
                auto ep = ServiceEndpoint::from_json(entry);
                c.endpoints[ep.kind] = std::move(ep);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return from_json(j);
}

void RunConfig::apply_env(const std::function<const char*(const char*)>& getenv_fn) {
    auto get = [&](const std::string& key) -> std::pair<std::string, const char*> {
        std::string name = std::string(kEnvPrefix) + key;
        return {name, getenv_fn(name.c_str())};
    };
    if (auto [n, v] = get("SEED"); v) seed = lab.seed = env_u64(n.c_str(), v);
    if (auto [n, v] = get("COUNTER"); v) counter = v;
    if (auto [n, v] = get("PARALLEL"); v) parallel = env_u64(n.c_str(), v);
    if (auto [n, v] = get("TAU_ORG"); v) tau_org = env_real(n.c_str(), v);
    if (auto [n, v] = get("BUDGET_TOKENS"); v) budget_tokens = env_u64(n.c_str(), v);
    if (auto [n, v] = get("OUT_DIR"); v) out_dir = v;
    if (auto [n, v] = get("JUDGE_CACHE"); v) judge_cache = v;

    for (auto kind : kAllKinds) {
        const auto base = upper(service_kind_name(kind)) + "_";
        auto [an, address] = get(base + "ADDRESS");
        auto [tn, transport] = get(base + "TRANSPORT");
        auto [mn, timeout] = get(base + "TIMEOUT_MS");
        auto [fn, inflight] = get(base + "MAX_INFLIGHT");
        if (!address && !transport && !timeout && !inflight) continue;
        auto it = endpoints.find(kind);
        if (it == endpoints.end()) {
            ServiceEndpoint ep;
            ep.kind = kind;
            it = endpoints.emplace(kind, ep).first;
        }
        auto& ep = it->second;
        if (address) ep.address = address;
        if (transport) ep.transport = parse_transport(transport);
        if (timeout) ep.timeout_ms = static_cast<int>(env_u64(mn.c_str(), timeout));
        if (inflight) ep.max_inflight = env_u64(fn.c_str(), inflight);
    }
    validate();
}

const ServiceEndpoint& RunConfig::endpoint(ServiceKind kind) const {
    auto it = endpoints.find(kind);
    if (it == endpoints.end())
        throw ConfigError("no endpoint configured for '" + service_kind_name(kind) + "' (set endpoints." +
                          service_kind_name(kind) + " or " + std::string(kEnvPrefix) +
                          upper(service_kind_name(kind)) + "_ADDRESS)");
    return it->second;
}

std::string RunConfig::digest() const { return to_hex(fnv1a64(to_json().dump())); }

}  // namespace recycle
