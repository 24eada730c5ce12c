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

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "recycle/bertscore.hpp"
#include "recycle/corpus.hpp"
#include "recycle/filter.hpp"
#include "recycle/prompts.hpp"
#include "recycle/transport.hpp"

namespace recycle {

inline constexpr std::string_view kRecycledSuffix = "#rec";
inline constexpr std::string_view kChunkJoiner = "\n";

struct DocumentFailure {
    std::string doc_id;
    std::string error;
};

/// Text of a successful reply, or the reason there is none.
std::optional<std::string> reply_text(const CallResult& result, std::string& error);

/// Rephrases one document chunk by chunk. Chunks go out concurrently through
/// the session, responses are joined with a single newline in input order.
/// Throws ServiceError (or a ParseError) when any chunk fails.
Document rephrase_document(const Document& doc, Session& session, TokenCounter counter,
                           const PromptTemplate& tmpl = PromptTemplate::builtin("repro"));

struct RecycleResult {
    Pool pool;
    std::vector<DocumentFailure> failures;
    std::size_t marker_missing = 0;
};

/// rephrase_document over a whole pool with all chunk requests sharing the
/// session's in-flight bound. Failed documents are left out of the pool and
/// listed in failures (and in the manifest).
RecycleResult recycle_pool(const Pool& pool, Session& session,
                           const PromptTemplate& tmpl = PromptTemplate::builtin("repro"));

struct DataManScores {
    ScoreTable table{"dataman"};
    std::vector<std::pair<std::string, DataManVerdict>> verdicts;  // pool order
    std::vector<DocumentFailure> failures;
};

DataManScores score_dataman(const Pool& pool, Session& session,
                            const PromptTemplate& tmpl = PromptTemplate::builtin("dataman"));

struct TextPair {
    std::string organic;
    std::string recycled;
};

template <typename T>
struct Judged {
    std::optional<T> value;
    std::string error;
};

std::vector<Judged<StructureVerdict>> judge_structure(
    std::span<const TextPair> pairs, Session& session,
    const PromptTemplate& tmpl = PromptTemplate::builtin("structure"));

/// Free-text structure label per document, trimmed.
std::vector<Judged<std::string>> classify_structure(
    std::span<const std::string> texts, Session& session,
    const PromptTemplate& tmpl = PromptTemplate::builtin("structure_class"));

std::vector<Judged<std::vector<Operation>>> classify_operations(
    std::span<const TextPair> pairs, Session& session,
    const PromptTemplate& tmpl = PromptTemplate::builtin("operation_class"));

/// Embedding provider behind an "embed" endpoint. The reply carries
/// {"vectors": [[...], ...]}, one row per token.
class ServiceEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit ServiceEmbeddingProvider(Session& session) : session_(session) {}
    EmbeddedText embed(std::string_view doc_id, std::string_view text) override;

private:
    Session& session_;
};

}  // namespace recycle
