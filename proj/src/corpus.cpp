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

#include "recycle/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "recycle/errors.hpp"

namespace recycle {

namespace {

bool is_space(unsigned char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

TokenCounter parse_counter(std::string_view name) {
    if (name == "whitespace-words") return TokenCounter::kWhitespaceWords;
    if (name == "bytes-div-4") return TokenCounter::kBytesDiv4;
    throw ConfigError("unknown token counter '" + std::string(name) +
                      "' (expected whitespace-words or bytes-div-4)");
}

std::string_view counter_name(TokenCounter counter) noexcept {
    switch (counter) {
        case TokenCounter::kWhitespaceWords: return "whitespace-words";
        case TokenCounter::kBytesDiv4: return "bytes-div-4";
    }
    return "whitespace-words";
}

std::uint64_t count_tokens(std::string_view text, TokenCounter counter) noexcept {
    if (counter == TokenCounter::kBytesDiv4) return text.size() / 4;
    std::uint64_t words = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

Document Document::make(std::string id, std::string text, TokenCounter counter,
                        std::optional<std::string> source) {
    Document d;
    d.id = std::move(id);
    d.text = std::move(text);
    d.source = std::move(source);
    d.token_count = count_tokens(d.text, counter);
    return d;
}

nlohmann::json PoolManifest::to_json() const {
    nlohmann::json j;
    j["doc_count"] = doc_count;
    j["total_tokens"] = total_tokens;
    j["threshold_applied"] = threshold_applied ? nlohmann::json(*threshold_applied) : nlohmann::json();
    j["source_label"] = source_label;
    j["counter"] = counter;
    j["parents"] = created_from;
    if (target_tokens) j["target_tokens"] = *target_tokens;
    if (shortfall) j["shortfall"] = *shortfall;
    if (overshoot) j["overshoot"] = *overshoot;
    j["failures"] = failures;
    return j;
}

PoolManifest PoolManifest::from_json(const nlohmann::json& j) {
    try {
        PoolManifest m;
        m.doc_count = j.at("doc_count").get<std::uint64_t>();
        m.total_tokens = j.at("total_tokens").get<std::uint64_t>();
        if (j.contains("threshold_applied") && !j["threshold_applied"].is_null())
            m.threshold_applied = j["threshold_applied"].get<double>();
        m.source_label = j.value("source_label", std::string{});
        m.counter = j.value("counter", std::string{"whitespace-words"});
        m.created_from = j.value("parents", std::vector<std::string>{});
        if (j.contains("target_tokens")) m.target_tokens = j["target_tokens"].get<std::uint64_t>();
        if (j.contains("shortfall")) m.shortfall = j["shortfall"].get<std::uint64_t>();
        if (j.contains("overshoot")) m.overshoot = j["overshoot"].get<std::uint64_t>();
        m.failures = j.value("failures", std::vector<std::string>{});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed manifest: ") + e.what(), j.dump());
    }
}

Pool::Pool(std::string source_label, TokenCounter counter) : counter_(counter) {
    manifest_.source_label = std::move(source_label);
    manifest_.counter = std::string(counter_name(counter));
}

Pool Pool::from_documents(std::vector<Document> docs, std::string source_label,
                          TokenCounter counter) {
    Pool pool(std::move(source_label), counter);
    pool.docs_.reserve(docs.size());
    for (auto& d : docs) pool.add(std::move(d));
    return pool;
}

void Pool::add(Document doc) {
    if (!ids_.insert(doc.id).second)
        throw ValidationError("duplicate document id '" + doc.id + "'");
    manifest_.total_tokens += doc.token_count;
    ++manifest_.doc_count;
    docs_.push_back(std::move(doc));
}

Pool Pool::empty_like(std::string source_label) const {
    return Pool(std::move(source_label), counter_);
}

void for_each_record(std::istream& in,
                     const std::function<void(std::size_t, Document&&)>& visit,
                     TokenCounter counter) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw ParseError("line " + std::to_string(line_no) + ": not a well-formed record", line);
        }
        if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
            !rec.contains("text") || !rec["text"].is_string()) {
            throw ParseError("line " + std::to_string(line_no) +
                                 ": record needs string fields \"id\" and \"text\"",
                             line);
        }
        if (rec.contains("source") && !rec["source"].is_string() && !rec["source"].is_null())
            throw ParseError("line " + std::to_string(line_no) + ": \"source\" must be a string", line);

        Document doc;
        doc.id = rec["id"].get<std::string>();
        doc.text = rec["text"].get<std::string>();
        if (rec.contains("source") && rec["source"].is_string())
            doc.source = rec["source"].get<std::string>();
        rec.erase("id");
        rec.erase("text");
        rec.erase("source");
        doc.extra = std::move(rec);
        doc.token_count = count_tokens(doc.text, counter);
        visit(line_no, std::move(doc));
    }
    if (in.bad()) throw IoError("read failure while ingesting records");
}

Pool ingest(std::istream& in, TokenCounter counter, std::string source_label) {
    Pool pool(std::move(source_label), counter);
    for_each_record(
        in, [&](std::size_t, Document&& doc) { pool.add(std::move(doc)); }, counter);
    return pool;
}

Pool ingest_file(const std::string& path, TokenCounter counter,
                 std::optional<std::string> source_label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return ingest(in, counter, source_label.value_or(path));
}

std::string record_line(const Document& doc) {
    nlohmann::json rec = doc.extra.is_object() ? doc.extra : nlohmann::json::object();
    rec["id"] = doc.id;
    rec["text"] = doc.text;
    if (doc.source) rec["source"] = *doc.source;
    return rec.dump();
}

std::size_t emit(const Pool& pool, std::ostream& out) {
    std::size_t written = 0;
    for (const auto& doc : pool.documents()) {
        out << record_line(doc) << '\n';
        ++written;
    }
    return written;
}

std::size_t emit_file(const Pool& pool, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const std::size_t n = emit(pool, out);
    out.flush();
    if (!out) throw IoError("write failure on '" + path + "'");
    return n;
}

void write_manifest_file(const PoolManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << manifest.to_json().dump(2) << '\n';
    if (!out) throw IoError("write failure on '" + path + "'");
}

PoolManifest read_manifest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    try {
        return PoolManifest::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest '" + path + "': " + e.what());
    }
}

std::string manifest_path_for(const std::string& pool_path) {
    return pool_path + ".manifest.json";
}

}  // namespace recycle
