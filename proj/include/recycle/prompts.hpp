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

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recycle/corpus.hpp"
#include "recycle/reward.hpp"

namespace recycle {

// Placeholder spellings recognised inside template bodies. Any other brace
// text (JSON examples, doubled braces) is literal.
inline constexpr std::string_view kOrganicText = "Organic Text";
inline constexpr std::string_view kRecycledText = "Recycled Text";
inline constexpr std::string_view kText = "Text";

inline constexpr std::string_view kParaphraseMarker = "Here is a paraphrased version:";

struct PromptTemplate {
    std::string name;
    std::string body;

    /// Shipped template by name: repro, dataman, structure, structure_class,
    /// operation_class, wrap, rewire. Throws ConfigError for other names.
    static PromptTemplate builtin(std::string_view name);
    static std::vector<std::string> builtin_names();

    /// Loads an asset file; one trailing newline is dropped, as for builtins.
    static PromptTemplate load_file(const std::string& path, std::string name);

    /// Placeholder names in order of first appearance.
    std::vector<std::string> placeholders() const;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes each placeholder occurrence once, left to right; substituted
/// text is never rescanned. Missing bindings throw ValidationError naming the
/// placeholder. Unused bindings are reported through warn().
std::string render(const PromptTemplate& tmpl, const Bindings& bindings);

struct DataManVerdict {
    std::array<int, 13> criteria{};
    int overall = 0;
    std::string domain;
};

/// Criterion labels [1]..[14] in template order.
const std::array<std::string_view, 14>& dataman_criteria_names();

DataManVerdict parse_dataman(std::string_view response);

/// "1" -> preserved, "0" -> not preserved after trimming; anything else is a
/// JudgeError.
StructureVerdict parse_structure_verdict(std::string_view response);

struct RephraseText {
    std::string text;
    bool marker_missing = false;
};

RephraseText parse_rephrase(std::string_view response);

struct Operation {
    std::string verb;
    std::string noun;
    friend bool operator==(const Operation&, const Operation&) = default;
};

std::vector<Operation> parse_operations(std::string_view response);

struct Chunk {
    std::string text;
    /// Whitespace that followed this chunk in the source.
    std::string separator;
};

/// Splits text into pieces of at most max_tokens tokens each, preferring
/// paragraph breaks, then sentence ends, then any whitespace, then a hard cut
/// on a UTF-8 character boundary. join_chunks(chunk(t)) == t.
std::vector<Chunk> chunk(std::string_view text, TokenCounter counter, std::uint64_t max_tokens = 2048);
std::string join_chunks(std::span<const Chunk> chunks);

std::string_view trim(std::string_view s) noexcept;

}  // namespace recycle
