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

#include "recycle/reward.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>

#include "recycle/errors.hpp"
#include "recycle/hash.hpp"

namespace recycle {

void RewardConfig::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError(std::string(name) + " must be a finite value >= 0");
    };
    nonneg(lambda_dataman, "lambda_dataman");
    nonneg(lambda_bertscore, "lambda_bertscore");
    nonneg(lambda_structure, "lambda_structure");
    nonneg(lambda_length, "lambda_length");
    if (!(tau_length > 0.0) || !std::isfinite(tau_length))
        throw ConfigError("tau_length must be > 0");
    if (!(tau_bertscore >= -1.0 && tau_bertscore <= 1.0))
        throw ConfigError("tau_bertscore must lie in [-1, 1]");
}

nlohmann::json RewardConfig::to_json() const {
    return {{"lambda_dataman", lambda_dataman},     {"lambda_bertscore", lambda_bertscore},
            {"lambda_structure", lambda_structure}, {"lambda_length", lambda_length},
            {"tau_bertscore", tau_bertscore},       {"tau_length", tau_length}};
}

RewardConfig RewardConfig::from_json(const nlohmann::json& j) {
    RewardConfig c;
    try {
        c.lambda_dataman = j.value("lambda_dataman", c.lambda_dataman);
        c.lambda_bertscore = j.value("lambda_bertscore", c.lambda_bertscore);
        c.lambda_structure = j.value("lambda_structure", c.lambda_structure);
        c.lambda_length = j.value("lambda_length", c.lambda_length);
        c.tau_bertscore = j.value("tau_bertscore", c.tau_bertscore);
        c.tau_length = j.value("tau_length", c.tau_length);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("reward config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json RewardBreakdown::to_json() const {
    return {{"organic_id", organic_id}, {"recycled_id", recycled_id}, {"r_dataman", r_dataman},
            {"r_bertscore", r_bertscore}, {"r_structure", r_structure}, {"r_length", r_length},
            {"total", total}};
}

double dataman_reward(int score_organic, int score_recycled) {
    if (score_organic < 1 || score_organic > 5 || score_recycled < 1 || score_recycled > 5)
        throw ValidationError("DataMan scores must be integers in [1, 5], got (" +
                              std::to_string(score_organic) + ", " + std::to_string(score_recycled) +
                              ")");
    return static_cast<double>(score_recycled - score_organic);
}

double continuous_quality_reward(double score_organic, double score_recycled) {
    if (!std::isfinite(score_organic) || !std::isfinite(score_recycled))
        throw ValidationError("quality scores must be finite");
    return score_recycled - score_organic;
}

int bertscore_reward(double similarity, double tau) {
    if (!(similarity >= -1.0 && similarity <= 1.0))
        throw ValidationError("similarity " + std::to_string(similarity) + " outside [-1, 1]");
    return similarity >= tau ? 1 : 0;
}

int structure_reward(StructureVerdict verdict) noexcept {
    return verdict == StructureVerdict::kPreserved ? 1 : 0;
}

int length_reward(std::uint64_t len_organic, std::uint64_t len_recycled, double tau) {
    if (len_organic == 0) throw DegenerateInputError("organic length is zero; length ratio undefined");
    return static_cast<double>(len_recycled) <= tau * static_cast<double>(len_organic) ? 1 : 0;
}

RewardBreakdown combine(const RewardComponents& c, const RewardConfig& config) {
    RewardBreakdown b;
    b.r_dataman = c.r_dataman;
    b.r_bertscore = c.r_bertscore;
    b.r_structure = c.r_structure;
    b.r_length = c.r_length;
    b.total = config.lambda_dataman * c.r_dataman + config.lambda_bertscore * c.r_bertscore +
              config.lambda_structure * c.r_structure + config.lambda_length * c.r_length;
    return b;
}

std::string pair_digest(const std::string& organic_id, const std::string& recycled_id) {
    Fnv1a64 h;
    h.update(organic_id);
    h.update(std::string_view("\0", 1));
    h.update(recycled_id);
    return to_hex(h.digest());
}

RewardBreakdown evaluate_pair(const PairSignals& s, const RewardConfig& config,
                              QualityReward quality) {
    RewardComponents c;
    if (quality == QualityReward::kDataMan) {
        if (std::floor(s.quality_organic) != s.quality_organic ||
            std::floor(s.quality_recycled) != s.quality_recycled)
            throw ValidationError("DataMan scores must be integers");
        c.r_dataman = dataman_reward(static_cast<int>(std::lround(s.quality_organic)),
                                     static_cast<int>(std::lround(s.quality_recycled)));
    } else {
        c.r_dataman = continuous_quality_reward(s.quality_organic, s.quality_recycled);
    }
    c.r_bertscore = bertscore_reward(s.similarity, config.tau_bertscore);
    c.r_structure = structure_reward(s.verdict);
    c.r_length = length_reward(s.len_organic, s.len_recycled, config.tau_length);

    RewardBreakdown b = combine(c, config);
    b.organic_id = s.organic_id;
    b.recycled_id = s.recycled_id;
    b.inputs_digest = pair_digest(s.organic_id, s.recycled_id);
    b.empty_rephrase = s.len_recycled == 0;
    return b;
}

std::vector<RewardBreakdown> evaluate_batch_serial(std::span<const PairSignals> pairs,
                                                   const RewardConfig& config,
                                                   QualityReward quality) {
    std::vector<RewardBreakdown> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(evaluate_pair(p, config, quality));
    return out;
}

std::vector<RewardBreakdown> evaluate_batch(std::span<const PairSignals> pairs,
                                            const RewardConfig& config, QualityReward quality) {
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
    std::vector<RewardBreakdown> out(pairs.size());
    std::vector<std::exception_ptr> errors(pairs.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = evaluate_pair(pairs[i], config, quality);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

void write_breakdowns(std::ostream& out, std::span<const RewardBreakdown> rows) {
    for (const auto& r : rows) out << r.to_json().dump() << '\n';
}

}  // namespace recycle
