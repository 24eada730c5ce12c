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

#include "recycle/clients.hpp"

#include "recycle/errors.hpp"
#include "recycle/log.hpp"

namespace recycle {

namespace {

void require_kind(const Session& session, ServiceKind kind) {
    if (session.endpoint().kind != kind)
        throw ConfigError("endpoint of kind '" + service_kind_name(session.endpoint().kind) +
                          "' used where '" + service_kind_name(kind) + "' is required");
}

struct ChunkPlan {
    std::vector<nlohmann::json> requests;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;  // per document [first, last)
};

ChunkPlan plan_chunks(std::span<const Document> docs, const Session& session, TokenCounter counter,
                      const PromptTemplate& tmpl) {
    ChunkPlan plan;
    const auto max_tokens = session.endpoint().params.max_tokens;
    for (const auto& doc : docs) {
        const std::size_t first = plan.requests.size();
        for (const auto& c : chunk(doc.text, counter, max_tokens))
            plan.requests.push_back(session.request_for(render(tmpl, {{std::string(kOrganicText), c.text}})));
        plan.ranges.emplace_back(first, plan.requests.size());
    }
    return plan;
}

// Joins the parsed chunk replies of one document, or explains the first failure.
std::optional<std::string> assemble(std::span<const CallResult> replies, std::string& error,
                                    std::size_t& marker_missing) {
    std::string joined;
    for (std::size_t i = 0; i < replies.size(); ++i) {
        auto text = reply_text(replies[i], error);
        if (!text) {
            error = "chunk " + std::to_string(i) + ": " + error;
            return std::nullopt;
        }
        try {
            auto parsed = parse_rephrase(*text);
            if (parsed.marker_missing) ++marker_missing;
            if (i) joined += kChunkJoiner;
            joined += parsed.text;
        } catch (const ParseError& e) {
            error = "chunk " + std::to_string(i) + ": " + e.what();
            return std::nullopt;
        }
    }
    return joined;
}

Document recycled_from(const Document& doc, std::string text, TokenCounter counter) {
    auto out = Document::make(doc.id + std::string(kRecycledSuffix), std::move(text), counter, "recycled");
    out.extra["parent"] = doc.id;
    return out;
}

template <typename T, typename Parse>
std::vector<Judged<T>> judge_all(const std::vector<nlohmann::json>& requests, Session& session,
                                 Parse parse) {
    const auto replies = session.call_all(requests);
    std::vector<Judged<T>> out(replies.size());
    for (std::size_t i = 0; i < replies.size(); ++i) {
        auto text = reply_text(replies[i], out[i].error);
        if (!text) continue;
        try {
            out[i].value = parse(*text);
        } catch (const ParseError& e) {
            out[i].error = e.what();
        }
    }
    return out;
}

}  // namespace

std::optional<std::string> reply_text(const CallResult& result, std::string& error) {
    if (!result.ok()) {
        error = result.error.empty() ? "no reply" : result.error;
        return std::nullopt;
    }
    const auto& r = *result.response;
    auto it = r.find("text");
    if (it == r.end() || !it->is_string()) {
        error = "reply has no \"text\" string";
        return std::nullopt;
    }
    return it->get<std::string>();
}

Document rephrase_document(const Document& doc, Session& session, TokenCounter counter,
                           const PromptTemplate& tmpl) {
    require_kind(session, ServiceKind::kRephrase);
    const auto plan = plan_chunks({&doc, 1}, session, counter, tmpl);
    const auto replies = session.call_all(plan.requests);
    std::string error;
    std::size_t marker_missing = 0;
    auto text = assemble(replies, error, marker_missing);
    if (!text) throw ServiceError("rephrasing '" + doc.id + "' failed: " + error);
    return recycled_from(doc, std::move(*text), counter);
}

RecycleResult recycle_pool(const Pool& pool, Session& session, const PromptTemplate& tmpl) {
    require_kind(session, ServiceKind::kRephrase);
    const auto& docs = pool.documents();
    const auto plan = plan_chunks(docs, session, pool.counter(), tmpl);
    const auto replies = session.call_all(plan.requests);

    RecycleResult result{pool.empty_like("recycled"), {}, 0};
    result.pool.manifest().created_from = {pool.manifest().source_label};
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto [first, last] = plan.ranges[d];
        std::string error;
        auto text = assemble(std::span(replies).subspan(first, last - first), error, result.marker_missing);
        if (!text) {
            warn("recycle: " + docs[d].id + ": " + error);
            result.failures.push_back({docs[d].id, error});
            result.pool.manifest().failures.push_back(docs[d].id);
            continue;
        }
        result.pool.add(recycled_from(docs[d], std::move(*text), pool.counter()));
    }
    return result;
}

DataManScores score_dataman(const Pool& pool, Session& session, const PromptTemplate& tmpl) {
    require_kind(session, ServiceKind::kScoreDataMan);
    std::vector<nlohmann::json> requests;
    requests.reserve(pool.size());
    for (const auto& doc : pool.documents())
        requests.push_back(session.request_for(render(tmpl, {{std::string(kText), doc.text}})));
    const auto judged = judge_all<DataManVerdict>(requests, session, parse_dataman);

    DataManScores out;
    for (std::size_t i = 0; i < judged.size(); ++i) {
        const auto& id = pool.documents()[i].id;
        if (!judged[i].value) {
            out.failures.push_back({id, judged[i].error});
            continue;
        }
        out.table.insert(id, judged[i].value->overall);
        out.verdicts.emplace_back(id, *judged[i].value);
    }
    return out;
}

std::vector<Judged<StructureVerdict>> judge_structure(std::span<const TextPair> pairs, Session& session,
                                                      const PromptTemplate& tmpl) {
    require_kind(session, ServiceKind::kJudgeStructure);
    std::vector<nlohmann::json> requests;
    requests.reserve(pairs.size());
    for (const auto& p : pairs)
        requests.push_back(session.request_for(render(
            tmpl, {{std::string(kOrganicText), p.organic}, {std::string(kRecycledText), p.recycled}})));
    return judge_all<StructureVerdict>(requests, session, parse_structure_verdict);
}

std::vector<Judged<std::string>> classify_structure(std::span<const std::string> texts, Session& session,
                                                    const PromptTemplate& tmpl) {
    require_kind(session, ServiceKind::kClassify);
    std::vector<nlohmann::json> requests;
    requests.reserve(texts.size());
    for (const auto& t : texts) requests.push_back(session.request_for(render(tmpl, {{std::string(kText), t}})));
    return judge_all<std::string>(requests, session, [](const std::string& text) {
        auto label = std::string(trim(text));
        if (label.empty()) throw JudgeError("structure classifier returned an empty label", text);
        return label;
    });
}

std::vector<Judged<std::vector<Operation>>> classify_operations(std::span<const TextPair> pairs,
                                                                Session& session,
                                                                const PromptTemplate& tmpl) {
    require_kind(session, ServiceKind::kClassify);
    std::vector<nlohmann::json> requests;
    requests.reserve(pairs.size());
    for (const auto& p : pairs)
        requests.push_back(session.request_for(render(
            tmpl, {{std::string(kOrganicText), p.organic}, {std::string(kRecycledText), p.recycled}})));
    return judge_all<std::vector<Operation>>(requests, session, parse_operations);
}

EmbeddedText ServiceEmbeddingProvider::embed(std::string_view doc_id, std::string_view text) {
    require_kind(session_, ServiceKind::kEmbed);
    if (split_whitespace(text).empty())
        throw DegenerateInputError("document '" + std::string(doc_id) + "' has no tokens to embed");
    const auto result = session_.call(session_.request_for(std::string(text)));
    if (!result.ok()) throw ProviderError("embedding '" + std::string(doc_id) + "' failed: " + result.error);
    const auto& r = *result.response;
    auto it = r.find("vectors");
    if (it == r.end() || !it->is_array() || it->empty() || !it->front().is_array() || it->front().empty())
        throw ProviderError("embedding reply for '" + std::string(doc_id) +
                            "' needs a non-empty \"vectors\" array of arrays");
    EmbeddedText out(std::string(doc_id), it->front().size());
    std::vector<double> row;
    for (const auto& v : *it) {
        if (!v.is_array() || v.size() != out.dim())
            throw ProviderError("embedding reply for '" + std::string(doc_id) + "' has ragged vectors");
        row.clear();
        for (const auto& x : v) {
            if (!x.is_number()) throw ProviderError("embedding reply holds a non-number");
            row.push_back(x.get<double>());
        }
        out.push_back(row);
    }
    return out;
}

}  // namespace recycle
