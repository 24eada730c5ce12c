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
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"

namespace recycle {

/// Token counters usable for budgets. Budgets are only comparable between
/// pools counted with the same counter, so the name travels in manifests.
enum class TokenCounter {
    kWhitespaceWords,
    kBytesDiv4,
};

TokenCounter parse_counter(std::string_view name);
std::string_view counter_name(TokenCounter counter) noexcept;

/// Whitespace counter: maximal runs of non-space bytes. Byte counter: size / 4
/// rounded down.
std::uint64_t count_tokens(std::string_view text, TokenCounter counter) noexcept;

struct Document {
    std::string id;
    std::string text;
    std::optional<std::string> source;
    std::uint64_t token_count = 0;
    /// Record fields this library does not interpret; written back verbatim.
    nlohmann::json extra = nlohmann::json::object();

    static Document make(std::string id, std::string text, TokenCounter counter,
                         std::optional<std::string> source = std::nullopt);

    friend bool operator==(const Document&, const Document&) = default;
};

struct PoolManifest {
    std::uint64_t doc_count = 0;
    std::uint64_t total_tokens = 0;
    std::optional<double> threshold_applied;
    std::string source_label;
    std::string counter = "whitespace-words";
    std::vector<std::string> created_from;

    // Budget bookkeeping, present only on pools produced by a budget search.
    std::optional<std::uint64_t> target_tokens;
    std::optional<std::uint64_t> shortfall;
    std::optional<std::uint64_t> overshoot;

    /// Ids that a stage tried and failed to produce (e.g. rephrase failures).
    std::vector<std::string> failures;

    nlohmann::json to_json() const;
    static PoolManifest from_json(const nlohmann::json& j);

    friend bool operator==(const PoolManifest&, const PoolManifest&) = default;
};

/// Ordered, id-unique collection of documents with a manifest that always
/// matches its members.
class Pool {
public:
    Pool() = default;
    Pool(std::string source_label, TokenCounter counter);

    static Pool from_documents(std::vector<Document> docs, std::string source_label,
                               TokenCounter counter);

    /// Appends a document; throws ValidationError on a duplicate id.
    void add(Document doc);

    const std::vector<Document>& documents() const noexcept { return docs_; }
    const PoolManifest& manifest() const noexcept { return manifest_; }
    PoolManifest& manifest() noexcept { return manifest_; }
    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }
    bool contains(const std::string& id) const { return ids_.count(id) != 0; }
    TokenCounter counter() const noexcept { return counter_; }

    /// Same counter and label, no documents, no budget fields.
    Pool empty_like(std::string source_label) const;

private:
    std::vector<Document> docs_;
    std::unordered_set<std::string> ids_;
    PoolManifest manifest_;
    TokenCounter counter_ = TokenCounter::kWhitespaceWords;
};

/// Streams line-delimited records, calling `visit` once per nonempty line with
/// its 1-based line number. Malformed lines throw ParseError naming the line.
void for_each_record(std::istream& in,
                     const std::function<void(std::size_t, Document&&)>& visit,
                     TokenCounter counter);

Pool ingest(std::istream& in, TokenCounter counter, std::string source_label = "organic");
Pool ingest_file(const std::string& path, TokenCounter counter,
                 std::optional<std::string> source_label = std::nullopt);

std::size_t emit(const Pool& pool, std::ostream& out);
std::size_t emit_file(const Pool& pool, const std::string& path);

std::string record_line(const Document& doc);

void write_manifest_file(const PoolManifest& manifest, const std::string& path);
PoolManifest read_manifest_file(const std::string& path);

/// Conventional manifest location next to a pool file.
std::string manifest_path_for(const std::string& pool_path);

}  // namespace recycle
