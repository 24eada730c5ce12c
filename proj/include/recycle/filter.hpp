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
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recycle/corpus.hpp"

namespace recycle {

/// Threshold that admits every finite score.
inline constexpr double kMinThreshold = std::numeric_limits<double>::lowest();
/// Threshold reported for an empty budget selection; admits nothing finite.
inline constexpr double kMaxThreshold = std::numeric_limits<double>::max();

struct QualityScore {
    std::string doc_id;
    std::string scorer_name;
    double value = 0.0;
};

/// One scorer's verdicts, at most one per document.
class ScoreTable {
public:
    ScoreTable() = default;
    explicit ScoreTable(std::string scorer) : scorer_(std::move(scorer)) {}

    /// Throws ValidationError if doc_id already has a score.
    void insert(const std::string& doc_id, double value);

    const std::string& scorer() const noexcept { return scorer_; }
    std::optional<double> find(const std::string& doc_id) const;
    /// Throws ValidationError naming doc_id if it has no score.
    double at(const std::string& doc_id) const;
    std::size_t size() const noexcept { return values_.size(); }

    /// Reads "doc_id"/"scorer"/"value" records. With `scorer` set, records of
    /// other scorers are skipped; without it the file must hold one scorer.
    static ScoreTable read(std::istream& in, std::optional<std::string> scorer = std::nullopt);
    static ScoreTable read_file(const std::string& path,
                                std::optional<std::string> scorer = std::nullopt);

    /// Writes records in the given document order.
    void write(std::ostream& out, const std::vector<std::string>& order) const;

private:
    std::string scorer_;
    std::unordered_map<std::string, double> values_;
};

/// Throws ValidationError naming the first pool document (in pool order)
/// that has no score.
void require_complete(const Pool& pool, const ScoreTable& scores);

/// keep[i] = score(doc i) >= tau. Parallel over documents.
std::vector<std::uint8_t> threshold_mask(const Pool& pool, const ScoreTable& scores, double tau);
/// Single-threaded reference for threshold_mask.
std::vector<std::uint8_t> threshold_mask_serial(const Pool& pool, const ScoreTable& scores,
                                                double tau);

/// {x in pool | Q(x) >= tau}, pool order preserved.
Pool select_by_threshold(const Pool& pool, const ScoreTable& scores, double tau);

struct BudgetSelection {
    double tau_rec = kMaxThreshold;
    Pool selected;
    std::uint64_t shortfall = 0;
    std::uint64_t overshoot = 0;
    /// Id of the last document admitted in (score desc, id asc) order. Ties at
    /// tau_rec with a larger id were not admitted.
    std::optional<std::string> last_id;
};

/// Indices of the pool sorted by (score desc, id asc).
std::vector<std::size_t> budget_order(const Pool& pool, const ScoreTable& scores);

/// Shortest prefix of budget_order whose tokens reach target_tokens.
BudgetSelection budget_threshold(const Pool& pool, const ScoreTable& scores,
                                 std::uint64_t target_tokens);

/// Union of disjoint pools; the manifest lists both parents.
Pool assemble_final(const Pool& org_hq, const Pool& rec_hq, std::string label = "final");

/// Keeps documents whose DataMan overall score is below 5. Every score in the
/// table for a pool document must be an integer in [1, 5].
Pool rl_data_filter(const Pool& pool, const ScoreTable& dataman_scores);

/// Validates an integer score on the 1..5 scale.
int as_dataman_score(double value, const std::string& doc_id = {});

}  // namespace recycle
