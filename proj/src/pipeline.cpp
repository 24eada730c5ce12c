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

#include "recycle/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "recycle/bertscore.hpp"
#include "recycle/errors.hpp"
#include "recycle/hash.hpp"
#include "recycle/log.hpp"
#include "recycle/reward.hpp"

namespace fs = std::filesystem;

namespace recycle {

namespace {

std::string file_name(const std::string& path) { return fs::path(path).filename().string(); }

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void refuse_overwrite(const std::string& input, const std::string& out) {
    std::error_code ec;
    if (fs::exists(out, ec) && fs::equivalent(input, out, ec))
        throw ConfigError("output '" + out + "' would overwrite input '" + input + "'");
}

void write_text(const std::string& path, const std::string& bytes) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << bytes;
    if (!out) throw IoError("write to '" + path + "' failed");
}

ScoreTable load_scores(const std::string& path, std::optional<std::string> scorer) {
    return ScoreTable::read_file(path, scorer);
}

std::string recycled_parent(const Document& doc) {
    if (doc.extra.is_object() && doc.extra.contains("parent") && doc.extra["parent"].is_string())
        return doc.extra["parent"].get<std::string>();
    if (doc.id.ends_with(kRecycledSuffix)) return doc.id.substr(0, doc.id.size() - kRecycledSuffix.size());
    throw ValidationError("recycled document '" + doc.id + "' names no organic parent");
}

std::string chart_file_name(const std::string& name) {
    std::string out = "chart_";
    for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out + ".svg";
}

}  // namespace

Session Context::session(ServiceKind kind) const {
    const auto& ep = config.endpoint(kind);
    return Session(ep, client_factory(ep));
}

Pool load_pool(const std::string& path, TokenCounter counter) {
    const auto manifest_path = manifest_path_for(path);
    std::optional<PoolManifest> stored;
    if (fs::exists(manifest_path)) {
        stored = read_manifest_file(manifest_path);
        if (stored->counter != counter_name(counter))
            throw ConfigError("pool '" + path + "' was counted with '" + stored->counter +
                              "' but the run uses '" + std::string(counter_name(counter)) + "'");
    }
    Pool pool = ingest_file(path, counter, stored ? stored->source_label : file_name(path));
    if (stored && (stored->doc_count != pool.manifest().doc_count ||
                   stored->total_tokens != pool.manifest().total_tokens))
        throw IntegrityError("pool '" + path + "' no longer matches its manifest (" +
                             std::to_string(pool.manifest().doc_count) + " docs / " +
                             std::to_string(pool.manifest().total_tokens) + " tokens vs " +
                             std::to_string(stored->doc_count) + " / " + std::to_string(stored->total_tokens) +
                             ")");
    return pool;
}

void save_pool(Pool& pool, const std::string& path) {
    ensure_parent(path);
    pool.manifest().source_label = file_name(path);
    emit_file(pool, path);
    write_manifest_file(pool.manifest(), manifest_path_for(path));
}

PoolManifest cmd_ingest(const std::string& input, const std::string& out, const Context& ctx) {
    refuse_overwrite(input, out);
    const auto counter = ctx.config.token_counter();
    std::ifstream in(input, std::ios::binary);
    if (!in) throw IoError("cannot open '" + input + "' for reading");
    ensure_parent(out);
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + out + "' for writing");

    PoolManifest m;
    m.source_label = file_name(out);
    m.counter = std::string(counter_name(counter));
    m.created_from = {file_name(input)};
    std::unordered_set<std::string> ids;
    for_each_record(
        in,
        [&](std::size_t line_no, Document&& doc) {
            if (!ids.insert(doc.id).second)
                throw ValidationError("line " + std::to_string(line_no) + ": duplicate document id '" + doc.id + "'");
            ++m.doc_count;
            m.total_tokens += doc.token_count;
            os << record_line(doc) << '\n';
        },
        counter);
    if (!os) throw IoError("write to '" + out + "' failed");
    os.close();
    write_manifest_file(m, manifest_path_for(out));
    return m;
}

ScoreOutcome cmd_score(const std::string& pool_path, const std::string& out, const Context& ctx) {
    refuse_overwrite(pool_path, out);
    const Pool pool = load_pool(pool_path, ctx.config.token_counter());
    auto session = ctx.session(ServiceKind::kScoreDataMan);
    auto scores = score_dataman(pool, session);
    ScoreOutcome outcome{scores.verdicts.size(), scores.failures};
    if (!scores.failures.empty())
        throw ServiceError(std::to_string(scores.failures.size()) + " of " + std::to_string(pool.size()) +
                           " documents could not be scored; first: '" + scores.failures.front().doc_id +
                           "': " + scores.failures.front().error);
    std::vector<std::string> order;
    order.reserve(pool.size());
    for (const auto& d : pool.documents()) order.push_back(d.id);
    ensure_parent(out);
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + out + "' for writing");
    scores.table.write(os, order);
    if (!os) throw IoError("write to '" + out + "' failed");
    return outcome;
}

PoolManifest cmd_filter(const FilterOptions& opts, const Context& ctx) {
    refuse_overwrite(opts.pool, opts.out);
    const bool budgeted = opts.budget.has_value() || opts.target_tokens.has_value();
    const int modes = int(opts.tau.has_value()) + int(budgeted) + int(opts.rl_data);
    if (modes > 1) throw ConfigError("filter: give exactly one of --tau, a budget (--budget/--target-tokens) or --rl-data");
    if (opts.budget && opts.target_tokens) throw ConfigError("filter: --budget and --target-tokens are exclusive");
    if (opts.budget && !opts.org_hq_manifest)
        throw ConfigError("filter: --budget needs --org-hq-manifest to know B_org_hq");

    const Pool pool = load_pool(opts.pool, ctx.config.token_counter());
    Pool out;
    if (opts.rl_data) {
        out = rl_data_filter(pool, load_scores(opts.scores, "dataman"));
    } else if (budgeted) {
        std::uint64_t target = 0;
        if (opts.target_tokens) {
            target = *opts.target_tokens;
        } else {
            const auto org_hq = read_manifest_file(*opts.org_hq_manifest);
            if (org_hq.counter != counter_name(pool.counter()))
                throw ConfigError("filter: org-hq manifest was counted with '" + org_hq.counter + "'");
            if (*opts.budget < org_hq.total_tokens)
                throw ConfigError("filter: budget " + std::to_string(*opts.budget) +
                                  " is below the organic high-quality total " +
                                  std::to_string(org_hq.total_tokens));
            target = *opts.budget - org_hq.total_tokens;
        }
        auto sel = budget_threshold(pool, load_scores(opts.scores, std::nullopt), target);
        if (sel.shortfall)
            warn("filter: budget short by " + std::to_string(sel.shortfall) + " tokens; whole pool selected");
        out = std::move(sel.selected);
    } else {
        out = select_by_threshold(pool, load_scores(opts.scores, std::nullopt), opts.tau.value_or(ctx.config.tau_org));
    }
    save_pool(out, opts.out);
    return out.manifest();
}

RecycleResult cmd_recycle(const std::string& pool_path, const std::string& out, const Context& ctx) {
    refuse_overwrite(pool_path, out);
    const Pool pool = load_pool(pool_path, ctx.config.token_counter());
    auto session = ctx.session(ServiceKind::kRephrase);
    auto result = recycle_pool(pool, session);
    if (result.marker_missing)
        warn("recycle: " + std::to_string(result.marker_missing) + " replies lacked the paraphrase marker");
    save_pool(result.pool, out);
    return result;
}

PoolManifest cmd_assemble(const std::string& org_hq, const std::string& rec_hq, const std::string& out,
                          const Context& ctx) {
    refuse_overwrite(org_hq, out);
    refuse_overwrite(rec_hq, out);
    const auto counter = ctx.config.token_counter();
    Pool final_pool = assemble_final(load_pool(org_hq, counter), load_pool(rec_hq, counter), file_name(out));
    save_pool(final_pool, out);
    return final_pool.manifest();
}

Report cmd_analyze(const AnalyzeOptions& opts, const Context& ctx) {
    const auto& cfg = ctx.config;
    const auto counter = cfg.token_counter();
    const Pool org = load_pool(opts.organic, counter);
    const Pool rec = load_pool(opts.recycled, counter);

    std::unordered_map<std::string, const Document*> by_id;
    for (const auto& d : org.documents()) by_id.emplace(d.id, &d);
    std::vector<std::pair<const Document*, const Document*>> pairs;
    for (const auto& d : rec.documents()) {
        const auto parent = recycled_parent(d);
        auto it = by_id.find(parent);
        if (it == by_id.end())
            throw ValidationError("recycled document '" + d.id + "' has no organic parent '" + parent + "'");
        pairs.emplace_back(it->second, &d);
    }
    if (opts.sample && *opts.sample < pairs.size()) {
        std::vector<std::size_t> idx(pairs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const auto ka = derive_seed(cfg.seed, pairs[a].second->id);
            const auto kb = derive_seed(cfg.seed, pairs[b].second->id);
            return ka != kb ? ka < kb : a < b;
        });
        idx.resize(*opts.sample);
        std::sort(idx.begin(), idx.end());
        std::vector<std::pair<const Document*, const Document*>> kept;
        for (auto i : idx) kept.push_back(pairs[i]);
        pairs = std::move(kept);
    }

    Report report;
    report.header = {to_hex(derive_seed(cfg.seed, cfg.digest() + "|" + file_name(opts.organic) + "|" +
                                                      file_name(opts.recycled))),
                     cfg.digest(), std::string(counter_name(counter)), cfg.seed};
    report.summaries.push_back({"pairs", static_cast<double>(pairs.size())});

    // DataMan distribution of the recycled side.
    std::optional<ScoreTable> rec_scores;
    if (opts.recycled_scores) rec_scores = load_scores(*opts.recycled_scores, "dataman");
    if (rec_scores) {
        std::vector<int> values;
        for (const auto& [o, r] : pairs) values.push_back(as_dataman_score(rec_scores->at(r->id), r->id));
        auto h = score_histogram(values);
        report.summaries.push_back({"dataman_fraction_5", h.fraction("5")});
        report.histograms.push_back(std::move(h));
    }

    // Semantic similarity.
    std::unique_ptr<EmbeddingProvider> provider;
    std::unique_ptr<Session> embed_session;
    if (cfg.has_endpoint(ServiceKind::kEmbed)) {
        const auto& ep = cfg.endpoint(ServiceKind::kEmbed);
        embed_session = std::make_unique<Session>(ep, ctx.client_factory(ep));
        provider = std::make_unique<ServiceEmbeddingProvider>(*embed_session);
    } else {
        provider = std::make_unique<HashEmbeddingProvider>();
    }
    std::vector<double> similarity(pairs.size(), 0.0);
    std::vector<double> measured;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        try {
            similarity[i] = text_similarity(*provider, pairs[i].first->text, pairs[i].second->text);
            measured.push_back(similarity[i]);
        } catch (const DegenerateInputError& e) {
            warn("analyze: similarity skipped for '" + pairs[i].second->id + "': " + e.what());
        }
    }
    auto sim = similarity_histogram(measured);
    report.summaries.push_back({"bertscore_mean", sim.mean.value_or(0.0)});
    report.histograms.push_back(std::move(sim));

    // Length ratios.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> lengths;
    for (const auto& [o, r] : pairs)
        if (o->token_count > 0) lengths.emplace_back(o->token_count, r->token_count);
    auto lr = length_ratio_distribution(lengths, cfg.reward.tau_length);
    report.summaries.push_back({"length_mean_ratio", lr.mean_ratio});
    report.summaries.push_back({"length_fraction_within_tau", lr.fraction_within});
    report.summaries.push_back({"empty_rephrasings", static_cast<double>(lr.empty_rephrasings)});
    report.histograms.push_back(std::move(lr.histogram));

    // Judge-backed reports, cached by request digest.
    std::optional<JudgeCache> cache;
    if (!cfg.judge_cache.empty()) cache = JudgeCache::load(cfg.judge_cache);
    auto judged_session = [&](ServiceKind kind, const std::string& tmpl) {
        const auto& ep = cfg.endpoint(kind);
        auto client = ctx.client_factory(ep);
        if (cache) client = std::make_unique<CachingClient>(std::move(client), *cache, tmpl);
        return Session(ep, std::move(client));
    };

    std::vector<TextPair> text_pairs;
    for (const auto& [o, r] : pairs) text_pairs.push_back({o->text, r->text});

    if (cfg.has_endpoint(ServiceKind::kClassify)) {
        auto structure_session = judged_session(ServiceKind::kClassify, "structure_class");
        std::vector<std::string> texts;
        for (const auto& [o, r] : pairs) texts.push_back(r->text);
        std::vector<std::string> labels;
        std::size_t failed = 0;
        for (auto& j : classify_structure(texts, structure_session)) {
            if (j.value) labels.push_back(*j.value);
            else ++failed;
        }
        report.histograms.push_back(structure_distribution(labels));

        auto ops_session = judged_session(ServiceKind::kClassify, "operation_class");
        std::vector<std::vector<Operation>> ops;
        for (auto& j : classify_operations(text_pairs, ops_session)) {
            if (j.value) ops.push_back(std::move(*j.value));
            else ++failed;
        }
        const auto op_report = categorize_operations(ops);
        report.summaries.push_back({"operations_sample_size", static_cast<double>(op_report.sample_size)});
        report.histograms.push_back(op_report.histogram());
        report.summaries.push_back({"judge_failures", static_cast<double>(failed)});
    }

    // Reward breakdowns need DataMan scores on both sides and a structure judge.
    if (opts.organic_scores) {
        if (!rec_scores) throw ConfigError("analyze: --org-scores needs --rec-scores");
        const auto org_scores = load_scores(*opts.organic_scores, "dataman");
        auto judge = judged_session(ServiceKind::kJudgeStructure, "structure");
        const auto verdicts = judge_structure(text_pairs, judge);
        std::vector<PairSignals> signals;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& [o, r] = pairs[i];
            if (!verdicts[i].value)
                throw JudgeError("structure judge failed for '" + r->id + "': " + verdicts[i].error);
            signals.push_back({o->id, r->id, org_scores.at(o->id), rec_scores->at(r->id), similarity[i],
                               *verdicts[i].value, o->token_count, r->token_count});
        }
        const auto rows = evaluate_batch(signals, cfg.reward);
        std::ostringstream os;
        write_breakdowns(os, rows);
        write_text((fs::path(opts.out_dir) / "rewards.jsonl").string(), os.str());
        double total = 0.0;
        for (const auto& row : rows) total += row.total;
        report.summaries.push_back({"reward_mean_total", rows.empty() ? 0.0 : total / static_cast<double>(rows.size())});
    }

    if (cache) cache->save(cfg.judge_cache);

    const fs::path dir(opts.out_dir);
    for (auto format : opts.formats) {
        switch (format) {
            case ReportFormat::kText: write_text((dir / "report.txt").string(), emit_report(report, format)); break;
            case ReportFormat::kDelimited: write_text((dir / "report.tsv").string(), emit_report(report, format)); break;
            case ReportFormat::kSvg:
                for (const auto& h : report.histograms)
                    write_text((dir / chart_file_name(h.name)).string(), render_svg_chart(h));
                break;
        }
    }
    return report;
}

grpo::LabResult cmd_grpo_lab(const std::string& out_dir, const Context& ctx) {
    auto result = grpo::run_lab(ctx.config.lab);
    const fs::path dir(out_dir);
    std::ostringstream curve;
    grpo::write_curve(curve, result.curve);
    write_text((dir / "curve.jsonl").string(), curve.str());
    write_text((dir / "curve.svg").string(), render_svg_curve(result.curve));
    nlohmann::json summary{{"config", ctx.config.lab.to_json()},
                           {"attainable_range", result.attainable_range},
                           {"first_total", result.curve.front().means.total},
                           {"last_total", result.curve.back().means.total}};
    write_text((dir / "lab.json").string(), summary.dump(2) + "\n");
    return result;
}

}  // namespace recycle
