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

// recycle: corpus pipeline driver.
//
//   recycle ingest raw.jsonl --out org.jsonl
//   recycle filter org.jsonl --scores org.scores.jsonl --out org_hq.jsonl
//   recycle recycle org.jsonl --out rec.jsonl
//   recycle score rec.jsonl --out rec.scores.jsonl
//   recycle filter rec.jsonl --scores rec.scores.jsonl --budget B
//           --org-hq-manifest org_hq.jsonl.manifest.json --out rec_hq.jsonl
//   recycle assemble org_hq.jsonl rec_hq.jsonl --out final.jsonl
//   recycle analyze --org org.jsonl --rec rec.jsonl --out reports/
//   recycle grpo-lab --out lab/

#include <omp.h>

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "recycle/errors.hpp"
#include "recycle/pipeline.hpp"

using namespace recycle;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> counter;
    std::optional<std::size_t> parallel;
    std::string out;
};

Context make_context(const Common& c) {
    Context ctx;
    if (!c.config_path.empty()) ctx.config = RunConfig::load_file(c.config_path);
    ctx.config.apply_env([](const char* name) { return std::getenv(name); });
    if (c.seed) {
        ctx.config.seed = *c.seed;
        ctx.config.lab.seed = *c.seed;
    }
    if (c.counter) ctx.config.counter = *c.counter;
    if (c.parallel) ctx.config.parallel = *c.parallel;
    ctx.config.validate();
    if (ctx.config.parallel > 0) omp_set_num_threads(static_cast<int>(ctx.config.parallel));
    return ctx;
}

void require_out(const Common& c, const char* what) {
    if (c.out.empty()) throw ConfigError(std::string("--out is required (") + what + ")");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Corpus recycling pipeline: filter, rephrase, assemble, analyze"};
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    app.add_option("--config", common.config_path, "JSON run config")->check(CLI::ExistingFile);
    app.add_option("--seed", common.seed, "Global seed");
    app.add_option("--counter", common.counter, "Token counter: whitespace-words | bytes-div-4");
    app.add_option("--parallel", common.parallel, "Worker threads (0: all cores)");
    app.add_option("--out", common.out, "Output file or directory");

    std::string input;
    auto* ingest = app.add_subcommand("ingest", "Normalize raw records into a pool with a manifest");
    ingest->add_option("input", input, "Line-delimited records with id and text")->required()->check(CLI::ExistingFile);

    std::string pool_path;
    auto* score = app.add_subcommand("score", "DataMan-score a pool through the score_dataman endpoint");
    score->add_option("pool", pool_path)->required()->check(CLI::ExistingFile);

    FilterOptions fopts;
    auto* filter = app.add_subcommand("filter", "Threshold, budget or RL-data selection");
    filter->add_option("pool", fopts.pool)->required()->check(CLI::ExistingFile);
    filter->add_option("--scores", fopts.scores, "Score table")->required()->check(CLI::ExistingFile);
    auto* tau = filter->add_option("--tau", fopts.tau, "Keep Q >= tau (default: config tau_org)");
    auto* budget = filter->add_option("--budget", fopts.budget, "Total token budget B");
    filter->add_option("--org-hq-manifest", fopts.org_hq_manifest, "Manifest giving B_org_hq")
        ->check(CLI::ExistingFile);
    auto* target = filter->add_option("--target-tokens", fopts.target_tokens, "Select a prefix reaching this many tokens");
    auto* rl = filter->add_flag("--rl-data", fopts.rl_data, "Keep documents with DataMan < 5");
    tau->excludes(budget)->excludes(target)->excludes(rl);
    rl->excludes(budget)->excludes(target);
    budget->excludes(target);

    auto* recycle_cmd = app.add_subcommand("recycle", "Rephrase every document through the rephrase endpoint");
    recycle_cmd->add_option("pool", pool_path)->required()->check(CLI::ExistingFile);

    std::string org_hq, rec_hq;
    auto* assemble = app.add_subcommand("assemble", "Union of the organic and recycled high-quality pools");
    assemble->add_option("org_hq", org_hq)->required()->check(CLI::ExistingFile);
    assemble->add_option("rec_hq", rec_hq)->required()->check(CLI::ExistingFile);

    AnalyzeOptions aopts;
    std::vector<std::string> formats;
    auto* analyze = app.add_subcommand("analyze", "Distribution and operation reports over organic/recycled pairs");
    analyze->add_option("--org", aopts.organic, "Organic pool")->required()->check(CLI::ExistingFile);
    analyze->add_option("--rec", aopts.recycled, "Recycled pool")->required()->check(CLI::ExistingFile);
    analyze->add_option("--rec-scores", aopts.recycled_scores, "DataMan table of the recycled pool")
        ->check(CLI::ExistingFile);
    analyze->add_option("--org-scores", aopts.organic_scores, "DataMan table of the organic pool")
        ->check(CLI::ExistingFile);
    analyze->add_option("--sample", aopts.sample, "Seeded sample size");
    analyze->add_option("--format", formats, "table-text | delimited | svg-plot (repeatable)");

    std::optional<std::size_t> steps;
    std::optional<std::string> ratio_ref;
    auto* lab = app.add_subcommand("grpo-lab", "Train the toy policy and write reward curves");
    lab->add_option("--steps", steps, "Optimizer steps");
    lab->add_option("--ratio-reference", ratio_ref, "rollout-policy | frozen-base");

    CLI11_PARSE(app, argc, argv);

    try {
        Context ctx = make_context(common);
        if (*ingest) {
            require_out(common, "pool path");
            const auto m = cmd_ingest(input, common.out, ctx);
            std::cout << "ingested " << m.doc_count << " documents, " << m.total_tokens << " tokens\n";
        } else if (*score) {
            require_out(common, "score table path");
            const auto r = cmd_score(pool_path, common.out, ctx);
            std::cout << "scored " << r.scored << " documents\n";
        } else if (*filter) {
            require_out(common, "pool path");
            fopts.out = common.out;
            if (!fopts.budget && !fopts.target_tokens && !fopts.tau && !fopts.rl_data && fopts.org_hq_manifest &&
                ctx.config.budget_tokens)
                fopts.budget = ctx.config.budget_tokens;
            const auto m = cmd_filter(fopts, ctx);
            std::cout << "selected " << m.doc_count << " documents, " << m.total_tokens << " tokens";
            if (m.threshold_applied) std::cout << ", threshold " << *m.threshold_applied;
            if (m.shortfall && *m.shortfall) std::cout << ", shortfall " << *m.shortfall;
            std::cout << '\n';
        } else if (*recycle_cmd) {
            require_out(common, "pool path");
            const auto r = cmd_recycle(pool_path, common.out, ctx);
            std::cout << "recycled " << r.pool.size() << " documents, " << r.failures.size() << " failed\n";
        } else if (*assemble) {
            require_out(common, "pool path");
            const auto m = cmd_assemble(org_hq, rec_hq, common.out, ctx);
            std::cout << "final pool: " << m.doc_count << " documents, " << m.total_tokens << " tokens\n";
        } else if (*analyze) {
            require_out(common, "report directory");
            aopts.out_dir = common.out;
            if (!formats.empty()) {
                aopts.formats.clear();
                for (const auto& f : formats) aopts.formats.push_back(parse_report_format(f));
            }
            const auto report = cmd_analyze(aopts, ctx);
            std::cout << "wrote " << report.histograms.size() << " histograms to " << common.out << '\n';
        } else if (*lab) {
            require_out(common, "curve directory");
            if (steps) ctx.config.lab.steps = *steps;
            if (ratio_ref) ctx.config.lab.ratio_reference = grpo::parse_ratio_reference(*ratio_ref);
            ctx.config.lab.validate();
            const auto r = cmd_grpo_lab(common.out, ctx);
            std::cout << "mean total reward " << r.curve.front().means.total << " -> " << r.curve.back().means.total
                      << " over " << r.curve.back().step << " steps (range " << r.attainable_range << ")\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
