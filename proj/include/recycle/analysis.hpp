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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "recycle/grpo.hpp"
#include "recycle/prompts.hpp"
#include "recycle/transport.hpp"

namespace recycle {

struct Histogram {
    enum class Kind { kCategorical, kNumeric };

    std::string name;
    Kind kind = Kind::kCategorical;
    std::vector<std::string> labels;  // categorical bins
    std::vector<double> edges;        // numeric: counts.size() + 1 strictly increasing edges
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
    std::optional<double> mean;

    /// Count for a categorical label; 0 when the label is not a bin.
    std::uint64_t count(std::string_view label) const;
    /// count(label) / total, 0 for an empty histogram.
    double fraction(std::string_view label) const;
    void validate() const;

    friend bool operator==(const Histogram&, const Histogram&) = default;
};

/// Categorical over "1".."5". Values outside 1..5 throw ValidationError.
Histogram score_histogram(std::span<const int> scores);

/// Numeric over [-1, 1]; the last bin is closed so 1.0 is counted. Carries the
/// sample mean.
Histogram similarity_histogram(std::span<const double> values, double bin_width = 0.05);

inline constexpr std::array<std::string_view, 4> kStructureCategories = {"plain", "markdown",
                                                                        "blog/forum", "others"};

/// Maps a free-text structure label onto one of kStructureCategories.
std::string_view structure_category(std::string_view label);
Histogram structure_distribution(std::span<const std::string> labels);

struct LengthRatioReport {
    Histogram histogram;
    double mean_ratio = 0.0;
    double fraction_within = 0.0;  // ratio <= tau
    double tau = 0.0;
    std::uint64_t empty_rephrasings = 0;
};

/// pairs are (len_organic, len_recycled). Bins have width bin_width starting
/// at 0 and extend to cover the largest ratio.
LengthRatioReport length_ratio_distribution(std::span<const std::pair<std::uint64_t, std::uint64_t>> pairs,
                                            double tau = kDefaultTauLength, double bin_width = 0.25);

/// Verb-stem table mapping extracted operations onto categories.
class OperationTable {
public:
    static OperationTable builtin();
    static OperationTable from_json(const nlohmann::json& j);

    /// Category for a verb: the first category with a stem that prefixes the
    /// lowercased verb, else the fallback.
    const std::string& categorize(std::string_view verb) const;
    /// Category names in table order with the fallback last.
    std::vector<std::string> categories() const;
    int version() const noexcept { return version_; }

private:
    int version_ = 0;
    std::vector<std::pair<std::string, std::vector<std::string>>> categories_;
    std::string fallback_;
};

struct OperationReport {
    std::vector<std::string> categories;
    std::vector<std::uint64_t> counts;
    std::uint64_t sample_size = 0;

    std::uint64_t count(std::string_view category) const;
    Histogram histogram() const;
};

OperationReport categorize_operations(std::span<const std::vector<Operation>> instances,
                                      const OperationTable& table = OperationTable::builtin());

// --- reports ----------------------------------------------------------------

struct ReportHeader {
    std::string run_id;
    std::string config_digest;
    std::string counter;
    std::uint64_t seed = 0;
    friend bool operator==(const ReportHeader&, const ReportHeader&) = default;
};

struct Summary {
    std::string name;
    double value = 0.0;
    friend bool operator==(const Summary&, const Summary&) = default;
};

struct Report {
    ReportHeader header;
    std::vector<Histogram> histograms;
    std::vector<Summary> summaries;
    friend bool operator==(const Report&, const Report&) = default;
};

enum class ReportFormat { kText, kDelimited, kSvg };

ReportFormat parse_report_format(std::string_view name);

/// Deterministic bytes for a report. Delimited output is tab separated with
/// one header row, then histogram, bin and summary rows; reals are written
/// with 17 significant digits so they parse back exactly. Svg stacks one bar
/// chart per histogram.
std::string emit_report(const Report& report, ReportFormat format);
Report parse_delimited_report(std::string_view text);

std::string render_svg_chart(const Histogram& histogram);

/// Reward-curve chart: one line per component mean against step.
std::string render_svg_curve(std::span<const grpo::CurvePoint> curve);
std::vector<grpo::CurvePoint> read_curve(std::istream& in);

// --- judge cache ------------------------------------------------------------

/// Judge replies keyed by (template name, digest of the request). Stored as
/// lines of {"digest", "template", "label"} sorted by key.
class JudgeCache {
public:
    static JudgeCache load(const std::string& path);  // missing file -> empty
    void save(const std::string& path) const;

    std::optional<std::string> find(const std::string& tmpl, const std::string& digest) const;
    void insert(const std::string& tmpl, const std::string& digest, std::string label);
    std::size_t size() const;

    static std::string digest_of(const nlohmann::json& request);

    JudgeCache() = default;
    JudgeCache(JudgeCache&& other) noexcept : entries_(std::move(other.entries_)) {}
    JudgeCache& operator=(JudgeCache&& other) noexcept {
        entries_ = std::move(other.entries_);
        return *this;
    }

private:
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, std::string> entries_;
};

/// Serves repeated requests from a JudgeCache and records new {"text"} replies.
class CachingClient final : public ServiceClient {
public:
    CachingClient(std::unique_ptr<ServiceClient> inner, JudgeCache& cache, std::string template_name)
        : inner_(std::move(inner)), cache_(cache), template_(std::move(template_name)) {}
    nlohmann::json call(const nlohmann::json& request, std::chrono::milliseconds timeout) override;
    std::size_t hits() const noexcept { return hits_; }

private:
    std::unique_ptr<ServiceClient> inner_;
    JudgeCache& cache_;
    std::string template_;
    std::atomic<std::size_t> hits_{0};
};

}  // namespace recycle
