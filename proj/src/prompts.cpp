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

#include "recycle/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "recycle/assets.hpp"
#include "recycle/errors.hpp"
#include "recycle/log.hpp"

namespace recycle {

namespace {

constexpr std::array<std::string_view, 3> kPlaceholders = {kOrganicText, kRecycledText, kText};

std::string strip_one_newline(std::string_view s) {
    if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
    return std::string(s);
}

bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Placeholder starting at body[pos] (which is '{'), if any.
std::optional<std::string_view> placeholder_at(std::string_view body, std::size_t pos) {
    for (auto name : kPlaceholders) {
        if (body.size() - pos >= name.size() + 2 && body.compare(pos + 1, name.size(), name) == 0 &&
            body[pos + 1 + name.size()] == '}')
            return name;
    }
    return std::nullopt;
}

}  // namespace

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

PromptTemplate PromptTemplate::builtin(std::string_view name) {
    for (const auto& a : assets::prompt_assets())
        if (a.name == name) return {std::string(name), strip_one_newline(a.content)};
    throw ConfigError("unknown prompt template '" + std::string(name) + "'");
}

std::vector<std::string> PromptTemplate::builtin_names() {
    std::vector<std::string> names;
    for (const auto& a : assets::prompt_assets()) names.emplace_back(a.name);
    return names;
}

PromptTemplate PromptTemplate::load_file(const std::string& path, std::string name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open prompt template '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return {std::move(name), strip_one_newline(ss.str())};
}

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> out;
    for (std::size_t pos = body.find('{'); pos != std::string::npos; pos = body.find('{', pos + 1)) {
        if (auto p = placeholder_at(body, pos)) {
            if (std::find(out.begin(), out.end(), *p) == out.end()) out.emplace_back(*p);
        }
    }
    return out;
}

std::string render(const PromptTemplate& tmpl, const Bindings& bindings) {
    const std::string_view body = tmpl.body;
    std::string out;
    out.reserve(body.size());
    std::set<std::string, std::less<>> used;
    std::size_t copied = 0;
    for (std::size_t pos = body.find('{'); pos != std::string_view::npos; pos = body.find('{', pos + 1)) {
        auto name = placeholder_at(body, pos);
        if (!name) continue;
        auto it = bindings.find(*name);
        if (it == bindings.end())
            throw ValidationError("template '" + tmpl.name + "': no binding for placeholder '" +
                                  std::string(*name) + "'");
        out.append(body.substr(copied, pos - copied));
        out.append(it->second);
        used.insert(it->first);
        copied = pos + name->size() + 2;
        pos = copied - 1;
    }
    out.append(body.substr(copied));
    for (const auto& [key, value] : bindings) {
        if (!used.count(key))
            warn("template '" + tmpl.name + "': binding '" + key + "' has no placeholder; ignored");
    }
    return out;
}

const std::array<std::string_view, 14>& dataman_criteria_names() {
    static const std::array<std::string_view, 14> kNames = {
        "Accuracy",           "Coherence",          "Language Consistency",
        "Semantic Density",   "Knowledge Novelty",  "Topic Focus",
        "Creativity",         "Professionalism",    "Style Consistency",
        "Grammatical Diversity", "Structural Standardization", "Originality",
        "Sensitivity",        "Overall Score"};
    return kNames;
}

DataManVerdict parse_dataman(std::string_view response) {
    static const std::regex kLine(R"(^\s*\[(\d{1,2})\]\s*([^:\n]*?)\s*:\s*(\S*?)\s*/\s*5\s*$)");
    static const std::regex kDomain(R"(^\s*Domain\s*:\s*(.*?)\s*$)");
    static const std::regex kInteger(R"(^[+-]?\d+$)");

    std::array<std::optional<std::string>, 15> raw_scores;
    DataManVerdict verdict;
    std::istringstream lines{std::string(response)};
    std::string line;
    std::smatch m;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::regex_match(line, m, kLine)) {
            const int idx = std::stoi(m[1].str());
            if (idx >= 1 && idx <= 14 && !raw_scores[idx]) raw_scores[idx] = m[3].str();
        } else if (verdict.domain.empty() && std::regex_match(line, m, kDomain)) {
            verdict.domain = m[1].str();
        }
    }

    const auto& names = dataman_criteria_names();
    for (int idx = 1; idx <= 14; ++idx) {
        const std::string label =
            "criterion " + std::to_string(idx) + " (" + std::string(names[idx - 1]) + ")";
        if (!raw_scores[idx])
            throw ParseError("DataMan response is missing " + label, std::string(response));
        const std::string& value = *raw_scores[idx];
        if (!std::regex_match(value, kInteger))
            throw ParseError("DataMan " + label + " score '" + value + "' is not an integer",
                             std::string(response));
        const int score = std::stoi(value);
        if (score < 1 || score > 5)
            throw ParseError("DataMan " + label + " score " + value + " is outside 1..5",
                             std::string(response));
        if (idx == 14)
            verdict.overall = score;
        else
            verdict.criteria[static_cast<std::size_t>(idx - 1)] = score;
    }
    return verdict;
}

StructureVerdict parse_structure_verdict(std::string_view response) {
    const auto t = trim(response);
    if (t == "1") return StructureVerdict::kPreserved;
    if (t == "0") return StructureVerdict::kNotPreserved;
    throw JudgeError("structure judge answered '" + std::string(t) + "', expected 1 or 0",
                     std::string(response));
}

RephraseText parse_rephrase(std::string_view response) {
    RephraseText out;
    const auto at = response.find(kParaphraseMarker);
    if (at == std::string_view::npos) {
        out.marker_missing = true;
        out.text = std::string(trim(response));
    } else {
        out.text = std::string(trim(response.substr(at + kParaphraseMarker.size())));
    }
    if (out.text.empty())
        throw EmptyRephraseError("rephraser returned no text", std::string(response));
    return out;
}

std::vector<Operation> parse_operations(std::string_view response) {
    std::string_view body = trim(response);
    if (body.starts_with("```")) {
        const auto nl = body.find('\n');
        const auto close = body.rfind("```");
        if (nl != std::string_view::npos && close != std::string_view::npos && close > nl)
            body = trim(body.substr(nl + 1, close - nl - 1));
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw ParseError("operation list is not valid JSON", std::string(response));
    }
    if (!j.is_object() || !j.contains("operations") || !j["operations"].is_array())
        throw ParseError("operation list needs an \"operations\" array", std::string(response));

    std::vector<Operation> ops;
    for (const auto& entry : j["operations"]) {
        if (!entry.is_string())
            throw ParseError("operation entries must be strings", std::string(response));
        const std::string s = entry.get<std::string>();
        const auto t = trim(s);
        if (t.empty()) throw ParseError("empty operation entry", std::string(response));
        std::size_t split = 0;
        while (split < t.size() && !is_space(t[split])) ++split;
        ops.push_back({std::string(t.substr(0, split)), std::string(trim(t.substr(split)))});
    }
    return ops;
}

namespace {

bool is_utf8_continuation(unsigned char c) noexcept { return (c & 0xC0) == 0x80; }

bool has_paragraph_break(std::string_view run) noexcept {
    return std::count(run.begin(), run.end(), '\n') >= 2;
}

std::size_t whitespace_run_end(std::string_view text, std::size_t b) noexcept {
    while (b < text.size() && is_space(text[b])) ++b;
    return b;
}

bool is_sentence_end(char c) noexcept { return c == '.' || c == '!' || c == '?'; }

}  // namespace

std::vector<Chunk> chunk(std::string_view text, TokenCounter counter, std::uint64_t max_tokens) {
    if (max_tokens == 0) throw ValidationError("chunk size must be at least one token");
    std::vector<Chunk> chunks;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::string_view rest = text.substr(pos);
        if (count_tokens(rest, counter) <= max_tokens) {
            chunks.push_back({std::string(rest), {}});
            break;
        }

        // Largest end with at most max_tokens tokens; counts are monotone in
        // the prefix length for both counters.
        std::size_t lo = pos + 1, hi = text.size();
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo + 1) / 2;
            if (count_tokens(text.substr(pos, mid - pos), counter) <= max_tokens)
                lo = mid;
            else
                hi = mid - 1;
        }
        const std::size_t limit = lo;

        std::size_t para = 0, sentence = 0, space = 0;
        for (std::size_t b = pos + 1; b <= limit && b < text.size(); ++b) {
            if (is_space(text[b - 1]) || !is_space(text[b])) continue;
            space = b;
            if (is_sentence_end(text[b - 1])) sentence = b;
            const std::size_t run_end = whitespace_run_end(text, b);
            if (has_paragraph_break(text.substr(b, run_end - b))) para = b;
        }
        const std::size_t cut = para ? para : sentence ? sentence : space;

        if (cut) {
            const std::size_t next = whitespace_run_end(text, cut);
            chunks.push_back({std::string(text.substr(pos, cut - pos)),
                              std::string(text.substr(cut, next - cut))});
            pos = next;
        } else {
            std::size_t end = limit;
            while (end > pos && end < text.size() &&
                   is_utf8_continuation(static_cast<unsigned char>(text[end])))
                --end;
            if (end == pos) {
                end = pos + 1;
                while (end < text.size() && is_utf8_continuation(static_cast<unsigned char>(text[end])))
                    ++end;
            }
            chunks.push_back({std::string(text.substr(pos, end - pos)), {}});
            pos = end;
        }
    }
    return chunks;
}

std::string join_chunks(std::span<const Chunk> chunks) {
    std::string out;
    for (const auto& c : chunks) {
        out += c.text;
        out += c.separator;
    }
    return out;
}

}  // namespace recycle
