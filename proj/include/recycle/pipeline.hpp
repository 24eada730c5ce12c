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

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "recycle/analysis.hpp"
#include "recycle/clients.hpp"
#include "recycle/config.hpp"
#include "recycle/corpus.hpp"
#include "recycle/filter.hpp"

namespace recycle {

using ClientFactory = std::function<std::unique_ptr<ServiceClient>(const ServiceEndpoint&)>;

struct Context {
    RunConfig config;
    ClientFactory client_factory = make_client;

    Session session(ServiceKind kind) const;
};

/// Reads a pool written by a previous stage. Label and counter come from the
/// sibling manifest when there is one; a counter that disagrees with the
/// configured one is an error.
Pool load_pool(const std::string& path, TokenCounter counter);

/// Writes pool records and the sibling manifest. The manifest's label becomes
/// the pool's file name.
void save_pool(Pool& pool, const std::string& path);

/// Streams raw records into a normalized pool file. Never holds more than one
/// record of text in memory.
PoolManifest cmd_ingest(const std::string& input, const std::string& out, const Context& ctx);

struct ScoreOutcome {
    std::size_t scored = 0;
    std::vector<DocumentFailure> failures;
};

/// DataMan-scores every document and writes a score table in pool order.
/// Any failed document makes the stage fail (nothing is written).
ScoreOutcome cmd_score(const std::string& pool, const std::string& out, const Context& ctx);

struct FilterOptions {
    std::string pool;
    std::string scores;
    std::string out;
    std::optional<double> tau;
    std::optional<std::uint64_t> budget;         // B
    std::optional<std::string> org_hq_manifest;  // supplies B_org_hq
    std::optional<std::uint64_t> target_tokens;  // B - B_org_hq given directly
    bool rl_data = false;                        // keep DataMan < 5
};

/// Exactly one of tau, budget selection or rl_data; tau falls back to the
/// configured tau_org when none is given.
PoolManifest cmd_filter(const FilterOptions& opts, const Context& ctx);

RecycleResult cmd_recycle(const std::string& pool, const std::string& out, const Context& ctx);

PoolManifest cmd_assemble(const std::string& org_hq, const std::string& rec_hq, const std::string& out,
                          const Context& ctx);

struct AnalyzeOptions {
    std::string organic;
    std::string recycled;
    std::optional<std::string> recycled_scores;  // DataMan table of the recycled pool
    std::optional<std::string> organic_scores;   // with recycled_scores: reward breakdowns
    std::string out_dir;
    std::optional<std::size_t> sample;
    std::vector<ReportFormat> formats = {ReportFormat::kText, ReportFormat::kDelimited, ReportFormat::kSvg};
};

Report cmd_analyze(const AnalyzeOptions& opts, const Context& ctx);

grpo::LabResult cmd_grpo_lab(const std::string& out_dir, const Context& ctx);

}  // namespace recycle
