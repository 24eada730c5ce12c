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


// Random multilingual documents with paragraph, sentence and long-word
// structure for chunking checks.

#pragma once

#include <random>
#include <string>
#include <vector>

namespace fixture {

inline std::string random_document(std::mt19937_64& rng, std::size_t max_words) {
    static const std::vector<std::string> words = {
        "data", "recycling", "the", "a", "Qualität", "наука", "数据", "质量", "ελληνικά", "😀🚀",
        "naïve", "x", "longer-token", "العربية", "日本語の文章", "emoji👩‍💻", "end."};
    static const std::vector<std::string> seps = {" ", " ", " ", " ", "  ", "\n", "\n\n", "\t", ". ", "! ", "\r\n",
                                                  " \n\n  "};
    const std::size_t n = rng() % (max_words + 1);
    std::string out;
    if (rng() % 8 == 0) out += "  ";
    for (std::size_t i = 0; i < n; ++i) {
        if (rng() % 400 == 0) {
            // A run with no whitespace forces a hard cut.
            const auto& w = words[rng() % words.size()];
            const std::size_t reps = 500 + rng() % 3000;
            for (std::size_t k = 0; k < reps; ++k) out += w;
        } else {
            out += words[rng() % words.size()];
        }
        if (i + 1 < n || rng() % 4 == 0) out += seps[rng() % seps.size()];
    }
    return out;
}

}  // namespace fixture
