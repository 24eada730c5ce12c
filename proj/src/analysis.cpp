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

#include "recycle/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "recycle/assets.hpp"
#include "recycle/errors.hpp"
#include "recycle/hash.hpp"

namespace recycle {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double parse_real(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("report: '" + s + "' is not a number", s);
    }
}

std::uint64_t parse_count(const std::string& s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw ParseError("report: '" + s + "' is not a count", s);
    return std::stoull(s);
}

// Numeric bin for v given strictly increasing edges; the last bin is closed.
std::size_t numeric_bin(const std::vector<double>& edges, double v) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - edges.begin() - 1, 0));
    return std::min(idx, edges.size() - 2);
}

double direct_mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

void check_field(const std::string& s, const char* what) {
    if (s.find_first_of("\t\n\r") != std::string::npos)
        throw ValidationError(std::string("report ") + what + " '" + s + "' contains a tab or newline");
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

std::string bin_label(const Histogram& h, std::size_t i) {
    if (h.kind == Histogram::Kind::kCategorical) return h.labels[i];
    const bool last = i + 1 == h.counts.size();
    return "[" + fixed(h.edges[i], 2) + ", " + fixed(h.edges[i + 1], 2) + (last ? "]" : ")");
}

constexpr int kChartWidth = 640;
constexpr int kChartHeight = 320;
constexpr int kMargin = 40;

}  // namespace

// --- histograms -------------------------------------------------------------

std::uint64_t Histogram::count(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return counts[i];
    return 0;
}

double Histogram::fraction(std::string_view label) const {
    return total == 0 ? 0.0 : static_cast<double>(count(label)) / static_cast<double>(total);
}

void Histogram::validate() const {
    std::uint64_t sum = 0;
    for (auto c : counts) sum += c;
    if (sum != total) throw IntegrityError("histogram '" + name + "': counts sum to " + std::to_string(sum) +
                                           ", total is " + std::to_string(total));
    if (kind == Kind::kCategorical) {
        if (labels.size() != counts.size())
            throw IntegrityError("histogram '" + name + "': label and count arity differ");
    } else {
        if (edges.size() != counts.size() + 1)
            throw IntegrityError("histogram '" + name + "': needs one more edge than bins");
        for (std::size_t i = 1; i < edges.size(); ++i)
            if (!(edges[i] > edges[i - 1]))
                throw IntegrityError("histogram '" + name + "': edges must increase strictly");
    }
}

Histogram score_histogram(std::span<const int> scores) {
    Histogram h{"dataman_score", Histogram::Kind::kCategorical, {"1", "2", "3", "4", "5"}, {}, {0, 0, 0, 0, 0}, 0, {}};
    for (int s : scores) {
        if (s < 1 || s > 5) throw ValidationError("DataMan score " + std::to_string(s) + " is outside 1..5");
        ++h.counts[static_cast<std::size_t>(s - 1)];
        ++h.total;
    }
    return h;
}

Histogram similarity_histogram(std::span<const double> values, double bin_width) {
    if (!(bin_width > 0.0) || !std::isfinite(bin_width))
        throw ValidationError("similarity bin width must be positive");
    Histogram h{"bertscore", Histogram::Kind::kNumeric, {}, {}, {}, 0, {}};
    const auto bins = static_cast<std::size_t>(std::ceil(2.0 / bin_width - 1e-9));
    for (std::size_t k = 0; k < bins; ++k) h.edges.push_back(-1.0 + static_cast<double>(k) * bin_width);
    h.edges.push_back(1.0);
    h.counts.assign(bins, 0);
    for (double v : values) {
        if (!(v >= -1.0 && v <= 1.0)) throw ValidationError("similarity " + real(v) + " is outside [-1, 1]");
        ++h.counts[numeric_bin(h.edges, v)];
        ++h.total;
    }
    h.mean = direct_mean(values);
    return h;
}

std::string_view structure_category(std::string_view label) {
    const auto l = lower(trim(label));
    if (l.find("markdown") != std::string::npos) return kStructureCategories[1];
    if (l.find("blog") != std::string::npos || l.find("forum") != std::string::npos)
        return kStructureCategories[2];
    if (l.find("plain") != std::string::npos) return kStructureCategories[0];
    return kStructureCategories[3];
}

Histogram structure_distribution(std::span<const std::string> labels) {
    Histogram h{"structure", Histogram::Kind::kCategorical, {}, {}, {}, 0, {}};
    for (auto c : kStructureCategories) h.labels.emplace_back(c);
    h.counts.assign(h.labels.size(), 0);
    for (const auto& l : labels) {
        const auto cat = structure_category(l);
        for (std::size_t i = 0; i < kStructureCategories.size(); ++i)
            if (kStructureCategories[i] == cat) ++h.counts[i];
        ++h.total;
    }
    return h;
}

LengthRatioReport length_ratio_distribution(std::span<const std::pair<std::uint64_t, std::uint64_t>> pairs,
                                            double tau, double bin_width) {
    if (!(bin_width > 0.0) || !std::isfinite(bin_width))
        throw ValidationError("length-ratio bin width must be positive");
    LengthRatioReport r;
    r.tau = tau;
    std::vector<double> ratios;
    ratios.reserve(pairs.size());
    std::uint64_t within = 0;
    for (const auto& [org, rec] : pairs) {
        if (org == 0) throw ValidationError("organic length is zero; length ratio undefined");
        const double ratio = static_cast<double>(rec) / static_cast<double>(org);
        ratios.push_back(ratio);
        if (ratio <= tau) ++within;
        if (rec == 0) ++r.empty_rephrasings;
    }
    const double top = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
    const auto bins = static_cast<std::size_t>(std::floor(top / bin_width)) + 1;

    auto& h = r.histogram;
    h.name = "length_ratio";
    h.kind = Histogram::Kind::kNumeric;
    for (std::size_t k = 0; k <= bins; ++k) h.edges.push_back(static_cast<double>(k) * bin_width);
    h.counts.assign(bins, 0);
    for (double v : ratios) ++h.counts[numeric_bin(h.edges, v)];
    h.total = ratios.size();
    h.mean = direct_mean(ratios);
    r.mean_ratio = *h.mean;
    r.fraction_within = ratios.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(ratios.size());
    return r;
}

// --- operations -------------------------------------------------------------

OperationTable OperationTable::builtin() {
    static const OperationTable kTable = from_json(nlohmann::json::parse(assets::operation_keywords()));
    return kTable;
}

OperationTable OperationTable::from_json(const nlohmann::json& j) {
    OperationTable t;
    try {
        t.version_ = j.at("version").get<int>();
        t.fallback_ = j.at("fallback").get<std::string>();
        for (const auto& c : j.at("categories")) {
            std::vector<std::string> stems;
            for (const auto& s : c.at("stems")) stems.push_back(lower(s.get<std::string>()));
            t.categories_.emplace_back(c.at("name").get<std::string>(), std::move(stems));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("operation keyword table: ") + e.what());
    }
    if (t.fallback_.empty()) throw ConfigError("operation keyword table needs a fallback category");
    return t;
}

const std::string& OperationTable::categorize(std::string_view verb) const {
    const auto v = lower(trim(verb));
    for (const auto& [name, stems] : categories_)
        for (const auto& stem : stems)
            if (!stem.empty() && v.starts_with(stem)) return name;
    return fallback_;
}

std::vector<std::string> OperationTable::categories() const {
    std::vector<std::string> out;
    for (const auto& c : categories_) out.push_back(c.first);
    out.push_back(fallback_);
    return out;
}

std::uint64_t OperationReport::count(std::string_view category) const {
    for (std::size_t i = 0; i < categories.size(); ++i)
        if (categories[i] == category) return counts[i];
    return 0;
}

Histogram OperationReport::histogram() const {
    Histogram h{"operations", Histogram::Kind::kCategorical, categories, {}, counts, 0, {}};
    for (auto c : counts) h.total += c;
    return h;
}

OperationReport categorize_operations(std::span<const std::vector<Operation>> instances,
                                      const OperationTable& table) {
    OperationReport r;
    r.categories = table.categories();
    r.counts.assign(r.categories.size(), 0);
    r.sample_size = instances.size();
    for (const auto& ops : instances) {
        for (const auto& op : ops) {
            const auto& cat = table.categorize(op.verb);
            const auto it = std::find(r.categories.begin(), r.categories.end(), cat);
            ++r.counts[static_cast<std::size_t>(it - r.categories.begin())];
        }
    }
    return r;
}

// --- report emission --------------------------------------------------------

ReportFormat parse_report_format(std::string_view name) {
    if (name == "table-text" || name == "text") return ReportFormat::kText;
    if (name == "delimited" || name == "tsv") return ReportFormat::kDelimited;
    if (name == "svg-plot" || name == "svg") return ReportFormat::kSvg;
    throw ConfigError("unknown report format '" + std::string(name) +
                      "' (expected table-text, delimited or svg-plot)");
}

namespace {

std::string emit_text(const Report& report) {
    std::ostringstream out;
    const auto& hd = report.header;
    out << "run_id        " << hd.run_id << '\n'
        << "config_digest " << hd.config_digest << '\n'
        << "counter       " << hd.counter << '\n'
        << "seed          " << hd.seed << '\n';
    for (const auto& h : report.histograms) {
        out << '\n' << h.name << " (" << (h.kind == Histogram::Kind::kNumeric ? "numeric" : "categorical")
            << ", total " << h.total;
        if (h.mean) out << ", mean " << fixed(*h.mean, 6);
        out << ")\n";
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            const double frac = h.total ? static_cast<double>(h.counts[i]) / static_cast<double>(h.total) : 0.0;
            char line[160];
            std::snprintf(line, sizeof line, "  %-16s %10llu  %7.4f\n", bin_label(h, i).c_str(),
                          static_cast<unsigned long long>(h.counts[i]), frac);
            out << line;
        }
    }
    if (!report.summaries.empty()) {
        out << "\nsummaries\n";
        for (const auto& s : report.summaries) {
            char line[160];
            std::snprintf(line, sizeof line, "  %-28s %.6f\n", s.name.c_str(), s.value);
            out << line;
        }
    }
    return out.str();
}

std::string emit_delimited(const Report& report) {
    const auto& hd = report.header;
    for (const auto* f : {&hd.run_id, &hd.config_digest, &hd.counter}) check_field(*f, "header field");
    std::ostringstream out;
    out << "header\trun_id\t" << hd.run_id << "\tconfig_digest\t" << hd.config_digest << "\tcounter\t"
        << hd.counter << "\tseed\t" << hd.seed << '\n';
    for (const auto& h : report.histograms) {
        h.validate();
        check_field(h.name, "histogram name");
        const bool numeric = h.kind == Histogram::Kind::kNumeric;
        out << "histogram\t" << h.name << '\t' << (numeric ? "numeric" : "categorical") << '\t' << h.total
            << '\t' << (h.mean ? real(*h.mean) : "") << '\n';
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            out << "bin\t" << h.name << '\t';
            if (numeric) {
                out << real(h.edges[i]) << '\t' << real(h.edges[i + 1]);
            } else {
                check_field(h.labels[i], "bin label");
                out << h.labels[i] << '\t';
            }
            out << '\t' << h.counts[i] << '\n';
        }
    }
    for (const auto& s : report.summaries) {
        check_field(s.name, "summary name");
        out << "summary\t" << s.name << '\t' << real(s.value) << '\n';
    }
    return out.str();
}

std::string svg_open(int width, int height) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " +
           std::to_string(height) + "\">\n";
}

// Bar chart body at vertical offset y0.
std::string svg_bars(const Histogram& h, int y0) {
    std::string out;
    const int plot_w = kChartWidth - 2 * kMargin;
    const int plot_h = kChartHeight - 2 * kMargin;
    const int base = y0 + kMargin + plot_h;
    out += "<text x=\"" + std::to_string(kMargin) + "\" y=\"" + std::to_string(y0 + 24) +
           "\" font-family=\"sans-serif\" font-size=\"14\">" + xml_escape(h.name) + " (n=" +
           std::to_string(h.total) + (h.mean ? ", mean=" + fixed(*h.mean, 4) : "") + ")</text>\n";
    out += "<line x1=\"" + std::to_string(kMargin) + "\" y1=\"" + std::to_string(base) + "\" x2=\"" +
           std::to_string(kMargin + plot_w) + "\" y2=\"" + std::to_string(base) + "\" stroke=\"black\"/>\n";
    const std::uint64_t peak = h.counts.empty() ? 0 : *std::max_element(h.counts.begin(), h.counts.end());
    const double bar_w = h.counts.empty() ? 0.0 : static_cast<double>(plot_w) / static_cast<double>(h.counts.size());
    const bool label_every = h.counts.size() <= 12;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double height = peak ? static_cast<double>(plot_h) * static_cast<double>(h.counts[i]) /
                                         static_cast<double>(peak)
                                   : 0.0;
        const double x = kMargin + bar_w * static_cast<double>(i);
        out += "<rect x=\"" + fixed(x + 1.0, 2) + "\" y=\"" + fixed(base - height, 2) + "\" width=\"" +
               fixed(std::max(bar_w - 2.0, 0.5), 2) + "\" height=\"" + fixed(height, 2) +
               "\" fill=\"#4c72b0\"><title>" + xml_escape(bin_label(h, i)) + ": " +
               std::to_string(h.counts[i]) + "</title></rect>\n";
        if (label_every || i % 5 == 0)
            out += "<text x=\"" + fixed(x + bar_w / 2.0, 2) + "\" y=\"" + std::to_string(base + 14) +
                   "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" +
                   xml_escape(h.kind == Histogram::Kind::kNumeric ? fixed(h.edges[i], 2) : h.labels[i]) +
                   "</text>\n";
    }
    return out;
}

}  // namespace

std::string render_svg_chart(const Histogram& histogram) {
    return svg_open(kChartWidth, kChartHeight) + svg_bars(histogram, 0) + "</svg>\n";
}

std::string emit_report(const Report& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::kText: return emit_text(report);
        case ReportFormat::kDelimited: return emit_delimited(report);
        case ReportFormat::kSvg: {
            const int height = std::max<int>(1, static_cast<int>(report.histograms.size())) * kChartHeight;
            std::string out = svg_open(kChartWidth, height);
            for (std::size_t i = 0; i < report.histograms.size(); ++i)
                out += svg_bars(report.histograms[i], static_cast<int>(i) * kChartHeight);
            return out + "</svg>\n";
        }
    }
    throw ConfigError("unknown report format");
}

Report parse_delimited_report(std::string_view text) {
    Report report;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        const auto where = "report line " + std::to_string(line_no);
        if (f[0] == "header") {
            if (f.size() != 9 || f[1] != "run_id" || f[3] != "config_digest" || f[5] != "counter" || f[7] != "seed")
                throw ParseError(where + ": malformed header", line);
            report.header = {f[2], f[4], f[6], parse_count(f[8])};
            have_header = true;
        } else if (f[0] == "histogram") {
            if (f.size() != 5 || (f[2] != "numeric" && f[2] != "categorical"))
                throw ParseError(where + ": malformed histogram row", line);
            Histogram h;
            h.name = f[1];
            h.kind = f[2] == "numeric" ? Histogram::Kind::kNumeric : Histogram::Kind::kCategorical;
            h.total = parse_count(f[3]);
            if (!f[4].empty()) h.mean = parse_real(f[4]);
            report.histograms.push_back(std::move(h));
        } else if (f[0] == "bin") {
            if (f.size() != 5 || report.histograms.empty() || report.histograms.back().name != f[1])
                throw ParseError(where + ": bin row outside its histogram", line);
            auto& h = report.histograms.back();
            if (h.kind == Histogram::Kind::kNumeric) {
                const double lo = parse_real(f[2]), hi = parse_real(f[3]);
                if (h.edges.empty()) h.edges.push_back(lo);
                else if (h.edges.back() != lo) throw ParseError(where + ": numeric bins are not contiguous", line);
                h.edges.push_back(hi);
            } else {
                h.labels.push_back(f[2]);
            }
            h.counts.push_back(parse_count(f[4]));
        } else if (f[0] == "summary") {
            if (f.size() != 3) throw ParseError(where + ": malformed summary row", line);
            report.summaries.push_back({f[1], parse_real(f[2])});
        } else {
            throw ParseError(where + ": unknown row type '" + f[0] + "'", line);
        }
    }
    if (!have_header) throw ParseError("report has no header row", std::string(text));
    for (const auto& h : report.histograms) h.validate();
    return report;
}

// --- reward curves ----------------------------------------------------------

std::vector<grpo::CurvePoint> read_curve(std::istream& in) {
    std::vector<grpo::CurvePoint> curve;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            grpo::CurvePoint p;
            p.step = j.at("step").get<std::size_t>();
            p.means.dataman = j.at("dataman").get<double>();
            p.means.bertscore = j.at("bertscore").get<double>();
            p.means.structure = j.at("structure").get<double>();
            p.means.length = j.at("length").get<double>();
            p.means.total = j.at("total").get<double>();
            p.means.kl = j.value("kl", 0.0);
            curve.push_back(p);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("curve line " + std::to_string(line_no) + ": " + e.what(), line);
        }
    }
    return curve;
}

std::string render_svg_curve(std::span<const grpo::CurvePoint> curve) {
    struct Series {
        const char* name;
        const char* colour;
        double grpo::ComponentMeans::*field;
    };
    static const Series kSeries[] = {{"total", "#000000", &grpo::ComponentMeans::total},
                                     {"dataman", "#4c72b0", &grpo::ComponentMeans::dataman},
                                     {"bertscore", "#55a868", &grpo::ComponentMeans::bertscore},
                                     {"structure", "#c44e52", &grpo::ComponentMeans::structure},
                                     {"length", "#8172b2", &grpo::ComponentMeans::length}};
    std::string out = svg_open(kChartWidth, kChartHeight);
    if (curve.empty()) return out + "</svg>\n";

    double lo = 0.0, hi = 0.0;
    for (const auto& p : curve)
        for (const auto& s : kSeries) {
            lo = std::min(lo, p.means.*s.field);
            hi = std::max(hi, p.means.*s.field);
        }
    if (hi <= lo) hi = lo + 1.0;
    const double max_step = std::max<double>(1.0, static_cast<double>(curve.back().step));
    const int plot_w = kChartWidth - 2 * kMargin;
    const int plot_h = kChartHeight - 2 * kMargin;
    auto px = [&](double step) { return kMargin + plot_w * step / max_step; };
    auto py = [&](double v) { return kMargin + plot_h * (hi - v) / (hi - lo); };

    out += "<line x1=\"" + std::to_string(kMargin) + "\" y1=\"" + fixed(py(lo), 2) + "\" x2=\"" +
           std::to_string(kMargin + plot_w) + "\" y2=\"" + fixed(py(lo), 2) + "\" stroke=\"black\"/>\n";
    int legend_y = kMargin;
    for (const auto& s : kSeries) {
        out += "<polyline fill=\"none\" stroke=\"" + std::string(s.colour) + "\" points=\"";
        for (std::size_t i = 0; i < curve.size(); ++i) {
            if (i) out += ' ';
            out += fixed(px(static_cast<double>(curve[i].step)), 2) + "," + fixed(py(curve[i].means.*s.field), 2);
        }
        out += "\"/>\n";
        out += "<text x=\"" + std::to_string(kChartWidth - kMargin - 60) + "\" y=\"" + std::to_string(legend_y) +
               "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"" + s.colour + "\">" + s.name + "</text>\n";
        legend_y += 12;
    }
    return out + "</svg>\n";
}

// --- judge cache ------------------------------------------------------------

JudgeCache JudgeCache::load(const std::string& path) {
    JudgeCache cache;
    std::ifstream in(path, std::ios::binary);
    if (!in) return cache;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            cache.entries_[{j.at("template").get<std::string>(), j.at("digest").get<std::string>()}] =
                j.at("label").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what(), line);
        }
    }
    return cache;
}

void JudgeCache::save(const std::string& path) const {
    std::lock_guard lock(mutex_);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write judge cache '" + path + "'");
    for (const auto& [key, label] : entries_)
        out << nlohmann::json{{"digest", key.second}, {"template", key.first}, {"label", label}}.dump() << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::optional<std::string> JudgeCache::find(const std::string& tmpl, const std::string& digest) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find({tmpl, digest});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void JudgeCache::insert(const std::string& tmpl, const std::string& digest, std::string label) {
    std::lock_guard lock(mutex_);
    entries_[{tmpl, digest}] = std::move(label);
}

std::size_t JudgeCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string JudgeCache::digest_of(const nlohmann::json& request) { return to_hex(fnv1a64(request.dump())); }

nlohmann::json CachingClient::call(const nlohmann::json& request, std::chrono::milliseconds timeout) {
    const auto digest = JudgeCache::digest_of(request);
    if (auto hit = cache_.find(template_, digest)) {
        ++hits_;
        return {{"text", *hit}};
    }
    auto reply = inner_->call(request, timeout);
    if (reply.is_object() && reply.contains("text") && reply["text"].is_string())
        cache_.insert(template_, digest, reply["text"].get<std::string>());
    return reply;
}

}  // namespace recycle
