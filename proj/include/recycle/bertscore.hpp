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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace recycle {

/// Token embeddings of one text, stored row-major (one row per token).
class EmbeddedText {
public:
    EmbeddedText() = default;
    EmbeddedText(std::string doc_id, std::size_t dim);

    /// Throws ValidationError if the row width differs from dim().
    void push_back(std::span<const double> vector);

    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& doc_id() const noexcept { return doc_id_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }

    friend bool operator==(const EmbeddedText&, const EmbeddedText&) = default;

private:
    std::string doc_id_;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// dot(u, v) / (|u| |v|), clamped to [-1, 1].
double cosine(std::span<const double> u, std::span<const double> v);

struct MatchScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Recall averages, over reference tokens, the best cosine against any
// candidate token; precision does the same from the candidate side. No idf
// weighting, no baseline rescaling.
MatchScore greedy_match_f1(const EmbeddedText& reference, const EmbeddedText& candidate);
MatchScore greedy_match_f1_serial(const EmbeddedText& reference, const EmbeddedText& candidate);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// Throws DegenerateInputError on text with no tokens, ProviderError when
    /// the backend fails.
    virtual EmbeddedText embed(std::string_view doc_id, std::string_view text) = 0;
};

/// Offline provider: each whitespace token becomes a unit vector drawn from a
/// seeded hash of its bytes, so equal tokens share a vector.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dim = 64, std::uint64_t seed = 0x5eed,
                                   bool nonnegative = false);
    EmbeddedText embed(std::string_view doc_id, std::string_view text) override;

    std::vector<double> token_vector(std::string_view token) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
    bool nonnegative_;
};

/// F1 between two texts under a provider.
double text_similarity(EmbeddingProvider& provider, std::string_view organic,
                       std::string_view recycled);

std::vector<std::string_view> split_whitespace(std::string_view text);

}  // namespace recycle
