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

#include "recycle/filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "recycle/errors.hpp"

namespace recycle {

void ScoreTable::insert(const std::string& doc_id, double value) {
    if (!values_.emplace(doc_id, value).second)
        throw ValidationError("duplicate score for document '" + doc_id + "' under scorer '" +
                              scorer_ + "'");
}

std::optional<double> ScoreTable::find(const std::string& doc_id) const {
    auto it = values_.find(doc_id);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

double ScoreTable::at(const std::string& doc_id) const {
    auto it = values_.find(doc_id);
    if (it == values_.end())
        throw ValidationError("missing " + scorer_ + " score for document '" + doc_id + "'");
    return it->second;
}

ScoreTable ScoreTable::read(std::istream& in, std::optional<std::string> scorer) {
    ScoreTable table(scorer.value_or(""));
    bool scorer_known = scorer.has_value();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw ParseError("score table line " + std::to_string(line_no) + ": not a well-formed record",
                             line);
        }
        if (!rec.is_object() || !rec.contains("doc_id") || !rec["doc_id"].is_string() ||
            !rec.contains("scorer") || !rec["scorer"].is_string() || !rec.contains("value") ||
            !rec["value"].is_number()) {
            throw ParseError("score table line " + std::to_string(line_no) +
                                 ": needs \"doc_id\", \"scorer\" and numeric \"value\"",
                             line);
        }
        const auto name = rec["scorer"].get<std::string>();
        if (!scorer_known) {
            table.scorer_ = name;
            scorer_known = true;
        } else if (name != table.scorer_) {
            if (scorer) continue;
            throw ParseError("score table line " + std::to_string(line_no) + ": scorer '" + name +
                                 "' differs from '" + table.scorer_ + "'; select one scorer",
                             line);
        }
        table.insert(rec["doc_id"].get<std::string>(), rec["value"].get<double>());
    }
    return table;
}

ScoreTable ScoreTable::read_file(const std::string& path, std::optional<std::string> scorer) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read(in, std::move(scorer));
}

void ScoreTable::write(std::ostream& out, const std::vector<std::string>& order) const {
    for (const auto& id : order) {
        nlohmann::json rec;
        rec["doc_id"] = id;
        rec["scorer"] = scorer_;
        rec["value"] = at(id);
        out << rec.dump() << '\n';
    }
}

void require_complete(const Pool& pool, const ScoreTable& scores) {
    for (const auto& doc : pool.documents()) {
        if (!scores.find(doc.id))
            throw ValidationError("missing " + scores.scorer() + " score for document '" + doc.id +
                                  "'");
    }
}

std::vector<std::uint8_t> threshold_mask_serial(const Pool& pool, const ScoreTable& scores,
                                                double tau) {
    require_complete(pool, scores);
    const auto& docs = pool.documents();
    std::vector<std::uint8_t> keep(docs.size(), 0);
    for (std::size_t i = 0; i < docs.size(); ++i) keep[i] = *scores.find(docs[i].id) >= tau;
    return keep;
}

std::vector<std::uint8_t> threshold_mask(const Pool& pool, const ScoreTable& scores, double tau) {
    require_complete(pool, scores);
    const auto& docs = pool.documents();
    const auto n = static_cast<std::ptrdiff_t>(docs.size());
    std::vector<std::uint8_t> keep(docs.size(), 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) keep[i] = *scores.find(docs[i].id) >= tau;
    return keep;
}

Pool select_by_threshold(const Pool& pool, const ScoreTable& scores, double tau) {
    const auto keep = threshold_mask(pool, scores, tau);
    Pool out = pool.empty_like(pool.manifest().source_label);
    const auto& docs = pool.documents();
    for (std::size_t i = 0; i < docs.size(); ++i)
        if (keep[i]) out.add(docs[i]);
    out.manifest().threshold_applied = tau;
    out.manifest().created_from = {pool.manifest().source_label};
    return out;
}

std::vector<std::size_t> budget_order(const Pool& pool, const ScoreTable& scores) {
    require_complete(pool, scores);
    const auto& docs = pool.documents();
    std::vector<double> value(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) value[i] = *scores.find(docs[i].id);
    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (value[a] != value[b]) return value[a] > value[b];
        return docs[a].id < docs[b].id;
    });
    return order;
}

BudgetSelection budget_threshold(const Pool& pool, const ScoreTable& scores,
                                 std::uint64_t target_tokens) {
    const auto order = budget_order(pool, scores);
    const auto& docs = pool.documents();

    std::size_t taken = 0;
    std::uint64_t sum = 0;
    while (sum < target_tokens && taken < order.size()) sum += docs[order[taken++]].token_count;

    BudgetSelection result;
    std::vector<std::uint8_t> keep(docs.size(), 0);
    for (std::size_t k = 0; k < taken; ++k) keep[order[k]] = 1;

    result.selected = pool.empty_like(pool.manifest().source_label);
    for (std::size_t i = 0; i < docs.size(); ++i)
        if (keep[i]) result.selected.add(docs[i]);

    if (taken > 0) {
        const auto& last = docs[order[taken - 1]];
        result.tau_rec = scores.at(last.id);
        result.last_id = last.id;
    }
    result.shortfall = sum < target_tokens ? target_tokens - sum : 0;
    result.overshoot = sum > target_tokens ? sum - target_tokens : 0;

    auto& m = result.selected.manifest();
    m.threshold_applied = result.tau_rec;
    m.target_tokens = target_tokens;
    m.shortfall = result.shortfall;
    m.overshoot = result.overshoot;
    m.created_from = {pool.manifest().source_label};
    return result;
}

Pool assemble_final(const Pool& org_hq, const Pool& rec_hq, std::string label) {
    if (org_hq.counter() != rec_hq.counter())
        throw ValidationError("cannot assemble pools counted with different token counters");
    Pool out(std::move(label), org_hq.counter());
    for (const auto& d : org_hq.documents()) out.add(d);
    for (const auto& d : rec_hq.documents()) {
        if (out.contains(d.id))
            throw ValidationError("id collision between organic and recycled pools: '" + d.id + "'");
        out.add(d);
    }
    out.manifest().created_from = {org_hq.manifest().source_label, rec_hq.manifest().source_label};
    return out;
}

int as_dataman_score(double value, const std::string& doc_id) {
    if (!(value >= 1.0 && value <= 5.0) || std::floor(value) != value) {
        std::string where = doc_id.empty() ? "" : " for document '" + doc_id + "'";
        throw ValidationError("DataMan score " + std::to_string(value) + where +
                              " is not an integer in [1, 5]");
    }
    return static_cast<int>(value);
}

Pool rl_data_filter(const Pool& pool, const ScoreTable& dataman_scores) {
    require_complete(pool, dataman_scores);
    Pool out = pool.empty_like(pool.manifest().source_label);
    for (const auto& doc : pool.documents()) {
        if (as_dataman_score(dataman_scores.at(doc.id), doc.id) < 5) out.add(doc);
    }
    out.manifest().created_from = {pool.manifest().source_label};
    return out;
}

}  // namespace recycle
