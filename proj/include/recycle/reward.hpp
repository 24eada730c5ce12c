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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace recycle {

// Shipped defaults for the composite rephrasing reward.
inline constexpr double kDefaultLambdaDataMan = 3.0;
inline constexpr double kDefaultLambdaBertScore = 1.0;
inline constexpr double kDefaultLambdaStructure = 1.0;
inline constexpr double kDefaultLambdaLength = 1.0;
inline constexpr double kDefaultTauBertScore = 0.65;
inline constexpr double kDefaultTauLength = 1.25;

struct RewardConfig {
    double lambda_dataman = kDefaultLambdaDataMan;
    double lambda_bertscore = kDefaultLambdaBertScore;
    double lambda_structure = kDefaultLambdaStructure;
    double lambda_length = kDefaultLambdaLength;
    double tau_bertscore = kDefaultTauBertScore;
    double tau_length = kDefaultTauLength;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    nlohmann::json to_json() const;
    static RewardConfig from_json(const nlohmann::json& j);

    friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

enum class StructureVerdict { kPreserved, kNotPreserved };

struct RewardBreakdown {
    std::string organic_id;
    std::string recycled_id;
    double r_dataman = 0.0;
    int r_bertscore = 0;
    int r_structure = 0;
    int r_length = 0;
    double total = 0.0;
    std::string inputs_digest;
    /// Set when the recycled text was empty; it still passes the length check.
    bool empty_rephrase = false;

    nlohmann::json to_json() const;
};

/// DataMan(recycled) - DataMan(organic); both must be integers in [1, 5].
double dataman_reward(int score_organic, int score_recycled);

/// Pluggable continuous quality reward (e.g. classifier probabilities):
/// recycled - organic, no range restriction beyond finiteness.
double continuous_quality_reward(double score_organic, double score_recycled);

/// 1 iff similarity >= tau. similarity must lie in [-1, 1].
int bertscore_reward(double similarity, double tau = kDefaultTauBertScore);

int structure_reward(StructureVerdict verdict) noexcept;

/// 1 iff len_recycled <= tau * len_organic. len_organic must be positive.
int length_reward(std::uint64_t len_organic, std::uint64_t len_recycled,
                  double tau = kDefaultTauLength);

struct RewardComponents {
    double r_dataman = 0.0;
    int r_bertscore = 0;
    int r_structure = 0;
    int r_length = 0;
};

RewardBreakdown combine(const RewardComponents& components, const RewardConfig& config);

/// Raw per-pair measurements from which all four components are derived.
struct PairSignals {
    std::string organic_id;
    std::string recycled_id;
    double quality_organic = 0.0;
    double quality_recycled = 0.0;
    double similarity = 0.0;
    StructureVerdict verdict = StructureVerdict::kNotPreserved;
    std::uint64_t len_organic = 0;
    std::uint64_t len_recycled = 0;
};

enum class QualityReward { kDataMan, kContinuous };

RewardBreakdown evaluate_pair(const PairSignals& signals, const RewardConfig& config,
                              QualityReward quality = QualityReward::kDataMan);

/// Parallel over pairs. Any per-pair error is rethrown after the loop, for
/// the lowest failing index.
std::vector<RewardBreakdown> evaluate_batch(std::span<const PairSignals> pairs,
                                            const RewardConfig& config,
                                            QualityReward quality = QualityReward::kDataMan);
std::vector<RewardBreakdown> evaluate_batch_serial(std::span<const PairSignals> pairs,
                                                   const RewardConfig& config,
                                                   QualityReward quality = QualityReward::kDataMan);

/// 16 hex digits of FNV-1a over (organic id, NUL, recycled id).
std::string pair_digest(const std::string& organic_id, const std::string& recycled_id);

/// One record per line: organic_id, recycled_id, r_dataman, r_bertscore,
/// r_structure, r_length, total.
void write_breakdowns(std::ostream& out, std::span<const RewardBreakdown> rows);

}  // namespace recycle
