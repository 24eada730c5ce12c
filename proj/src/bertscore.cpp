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

#include "recycle/bertscore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "recycle/errors.hpp"
#include "recycle/hash.hpp"

namespace recycle {

EmbeddedText::EmbeddedText(std::string doc_id, std::size_t dim)
    : doc_id_(std::move(doc_id)), dim_(dim) {
    if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

void EmbeddedText::push_back(std::span<const double> vector) {
    if (vector.size() != dim_)
        throw ValidationError("embedding row has dimension " + std::to_string(vector.size()) +
                              ", expected " + std::to_string(dim_));
    data_.insert(data_.end(), vector.begin(), vector.end());
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw ValidationError("cosine of vectors with different dimensions");
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        dot += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    if (uu == 0.0 || vv == 0.0) throw DegenerateInputError("cosine of a zero vector");
    // sqrt(uu * uu) == uu exactly, so identical rows score exactly 1.
    const double norms = uu * vv;
    const double denom = std::isfinite(norms) && norms > 0.0 ? std::sqrt(norms) : std::sqrt(uu) * std::sqrt(vv);
    return std::clamp(dot / denom, -1.0, 1.0);
}

namespace {

void check_pair(const EmbeddedText& reference, const EmbeddedText& candidate) {
    if (reference.empty() || candidate.empty())
        throw DegenerateInputError("greedy matching needs two nonempty token sequences");
    if (reference.dim() != candidate.dim())
        throw ValidationError("embedding dimensions differ (" + std::to_string(reference.dim()) +
                              " vs " + std::to_string(candidate.dim()) + ")");
}

// Shared tail of both kernels so the serial and parallel paths round
// identically: maxima are reduced in index order.
MatchScore finish(const std::vector<double>& sim, std::size_t rows, std::size_t cols) {
    double recall_sum = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cols; ++j) best = std::max(best, sim[i * cols + j]);
        recall_sum += best;
    }
    double precision_sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < rows; ++i) best = std::max(best, sim[i * cols + j]);
        precision_sum += best;
    }
    MatchScore s;
    s.recall = recall_sum / static_cast<double>(rows);
    s.precision = precision_sum / static_cast<double>(cols);
    const double denom = s.precision + s.recall;
    s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
    return s;
}

}  // namespace

MatchScore greedy_match_f1_serial(const EmbeddedText& reference, const EmbeddedText& candidate) {
    check_pair(reference, candidate);
    const std::size_t rows = reference.size(), cols = candidate.size();
    std::vector<double> sim(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            sim[i * cols + j] = cosine(reference.row(i), candidate.row(j));
    return finish(sim, rows, cols);
}

MatchScore greedy_match_f1(const EmbeddedText& reference, const EmbeddedText& candidate) {
    check_pair(reference, candidate);
    const std::size_t rows = reference.size(), cols = candidate.size();
    std::vector<double> sim(rows * cols);
    // Zero rows are rejected up front so the parallel region cannot throw.
    for (std::size_t i = 0; i < rows; ++i) (void)cosine(reference.row(i), reference.row(i));
    for (std::size_t j = 0; j < cols; ++j) (void)cosine(candidate.row(j), candidate.row(j));

    const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            sim[static_cast<std::size_t>(i) * cols + j] =
                cosine(reference.row(static_cast<std::size_t>(i)), candidate.row(j));
    return finish(sim, rows, cols);
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    auto space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    };
    while (i < text.size()) {
        while (i < text.size() && space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !space(text[i])) ++i;
        if (i > start) tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed, bool nonnegative)
    : dim_(dim), seed_(seed), nonnegative_(nonnegative) {
    if (dim == 0) throw ConfigError("hash embedding dimension must be positive");
}

std::vector<double> HashEmbeddingProvider::token_vector(std::string_view token) const {
    std::vector<double> v(dim_);
    std::uint64_t state = seed_ ^ fnv1a64(token);
    double norm2 = 0.0;
    while (norm2 == 0.0) {
        for (auto& x : v) {
            const double u = unit_double(splitmix64(state));
            x = nonnegative_ ? u : 2.0 * u - 1.0;
            norm2 += x * x;
        }
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
}

EmbeddedText HashEmbeddingProvider::embed(std::string_view doc_id, std::string_view text) {
    const auto tokens = split_whitespace(text);
    if (tokens.empty())
        throw DegenerateInputError("cannot embed text with no tokens (doc '" + std::string(doc_id) +
                                   "')");
    EmbeddedText out{std::string(doc_id), dim_};
    for (auto tok : tokens) out.push_back(token_vector(tok));
    return out;
}

double text_similarity(EmbeddingProvider& provider, std::string_view organic,
                       std::string_view recycled) {
    const auto ref = provider.embed("organic", organic);
    const auto cand = provider.embed("recycled", recycled);
    return greedy_match_f1(ref, cand).f1;
}

}  // namespace recycle
