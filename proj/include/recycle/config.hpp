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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "recycle/corpus.hpp"
#include "recycle/grpo.hpp"
#include "recycle/reward.hpp"
#include "recycle/transport.hpp"

namespace recycle {

inline constexpr double kDefaultTauOrg = 0.018112;
inline constexpr int kRlDataMaxDataMan = 5;  // RL inputs keep DataMan < 5
inline constexpr std::string_view kEnvPrefix = "RECYCLE_";

struct RunConfig {
    std::string counter = "whitespace-words";
    std::uint64_t seed = 1234;
    std::size_t parallel = 0;  // 0: all available execution units

    double tau_org = kDefaultTauOrg;
    std::optional<std::uint64_t> budget_tokens;  // B

    RewardConfig reward;
    grpo::LabConfig lab;  // lab.grpo holds n, epsilon, beta; lab.reward mirrors reward

    std::map<ServiceKind, ServiceEndpoint> endpoints;

    std::string out_dir = ".";
    std::string judge_cache;  // empty: no cache

    void validate() const;
    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load_file(const std::string& path);

    /// Applies RECYCLE_* variables: SEED (global and lab), COUNTER, PARALLEL, TAU_ORG,
    /// BUDGET_TOKENS, OUT_DIR, JUDGE_CACHE and, per service kind K (upper
    /// case), K_ADDRESS, K_TRANSPORT, K_TIMEOUT_MS, K_MAX_INFLIGHT.
    void apply_env(const std::function<const char*(const char*)>& getenv_fn);

    const ServiceEndpoint& endpoint(ServiceKind kind) const;
    bool has_endpoint(ServiceKind kind) const { return endpoints.count(kind) != 0; }

    TokenCounter token_counter() const { return parse_counter(counter); }

    /// Hex digest of the canonical JSON form.
    std::string digest() const;
};

}  // namespace recycle
