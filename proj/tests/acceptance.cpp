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


// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "grpo_fixture.hpp"
#include "oracles.hpp"
#include "recycle/bertscore.hpp"
#include "recycle/config.hpp"
#include "recycle/filter.hpp"
#include "recycle/grpo.hpp"
#include "recycle/prompts.hpp"
#include "recycle/reward.hpp"
#include "text_fixture.hpp"

using namespace recycle;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// --- budget prefix ----------------------------------------------------------

Outcome budget_prefix() {
    Outcome o;
    const auto t0 = Clock::now();
    std::size_t largest = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n = rng() % 1001;
        largest = std::max(largest, n);
        const bool ties = rng() % 2;
        Pool pool("p", TokenCounter::kWhitespaceWords);
        ScoreTable scores("q");
        std::vector<oracle::Item> items;
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string id = "d" + std::to_string(rng() % 1000000) + "-" + std::to_string(i);
            const std::uint64_t tokens = rng() % 60;
            std::string text;
            for (std::uint64_t k = 0; k < tokens; ++k) text += k ? " t" : "t";
            const double score = ties ? static_cast<double>(rng() % 8) : std::uniform_real_distribution<double>()(rng);
            pool.add(Document::make(id, text, TokenCounter::kWhitespaceWords));
            scores.insert(id, score);
            items.push_back({id, score, tokens});
            total += tokens;
        }
        const std::uint64_t target = rng() % (total + total / 10 + 2);
        const auto got = budget_threshold(pool, scores, target);
        const auto want = oracle::budget_prefix(items, target);

        std::vector<std::string> got_ids;
        for (std::size_t idx : budget_order(pool, scores)) {
            if (got_ids.size() == got.selected.size()) break;
            got_ids.push_back(pool.documents()[idx].id);
        }
        std::vector<std::string> selected;
        for (const auto& d : got.selected.documents()) selected.push_back(d.id);
        std::vector<std::string> a = selected, b = want.ids;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b || got_ids != want.ids) o.fail("seed " + std::to_string(seed) + ": selection differs");
        if (got.shortfall != want.shortfall) o.fail("seed " + std::to_string(seed) + ": shortfall differs");
        if (!want.empty && got.tau_rec != want.tau) o.fail("seed " + std::to_string(seed) + ": tau differs");
        if (got.selected.manifest().total_tokens + got.shortfall < target)
            o.fail("seed " + std::to_string(seed) + ": budget not reached");
    }
    const double s = seconds_since(t0);
    if (s >= 5.0) o.fail("runtime " + fmt("%.2f s", s));
    if (o.pass) o.detail = "200 seeds, pools up to " + std::to_string(largest) + " docs, " + fmt("%.2f s", s);
    return o;
}

// --- constants ----------------------------------------------------------------

Outcome constants() {
    Outcome o;
    const RunConfig c;
    auto expect = [&](const char* name, double got, double want) {
        if (got != want) o.fail(std::string(name) + " = " + fmt("%.17g", got));
    };
    expect("tau_org", c.tau_org, 0.018112);
    expect("tau_bertscore", c.reward.tau_bertscore, 0.65);
    expect("tau_length", c.reward.tau_length, 1.25);
    expect("lambda_dataman", c.reward.lambda_dataman, 3);
    expect("lambda_bertscore", c.reward.lambda_bertscore, 1);
    expect("lambda_structure", c.reward.lambda_structure, 1);
    expect("lambda_length", c.reward.lambda_length, 1);
    expect("epsilon", c.lab.grpo.epsilon, 0.2);
    expect("beta", c.lab.grpo.beta, 0.005);
    expect("n", static_cast<double>(c.lab.grpo.n_rollouts), 8);
    const auto j = c.to_json();
    if (j["filter"]["tau_org"] != 0.018112 || j["grpo"]["n_rollouts"] != 8 || j["reward"]["lambda_dataman"] != 3.0)
        o.fail("serialized config differs");
    if (o.pass) o.detail = "tau_org=0.018112 tau_B=0.65 tau_L=1.25 lambda=(3,1,1,1) eps=0.2 beta=0.005 n=8";
    return o;
}

// --- reward -------------------------------------------------------------------

Outcome reward_math() {
    Outcome o;
    std::mt19937_64 rng(2024);
    const RewardConfig cfg;
    const oracle::Weights w;
    for (int i = 0; i < 1000; ++i) {
        PairSignals s;
        s.organic_id = "o" + std::to_string(i);
        s.recycled_id = s.organic_id + "#rec";
        s.quality_organic = static_cast<double>(1 + rng() % 5);
        s.quality_recycled = static_cast<double>(1 + rng() % 5);
        s.similarity = rng() % 5 == 0 ? 0.65 : std::uniform_real_distribution<double>(-1, 1)(rng);
        s.verdict = rng() % 2 ? StructureVerdict::kPreserved : StructureVerdict::kNotPreserved;
        s.len_organic = 4 * (1 + rng() % 100);
        s.len_recycled = rng() % 4 == 0 ? s.len_organic / 4 * 5 : rng() % (2 * s.len_organic);
        const oracle::RewardTuple t{static_cast<int>(s.quality_organic), static_cast<int>(s.quality_recycled),
                                    s.similarity, s.verdict == StructureVerdict::kPreserved, s.len_organic,
                                    s.len_recycled};
        if (evaluate_pair(s, cfg).total != oracle::reward_total(t, w)) o.fail("tuple " + std::to_string(i) + " differs");
    }
    if (bertscore_reward(0.65) != 1) o.fail("similarity 0.65 does not score 1");
    if (length_reward(100, 125) != 1 || length_reward(4, 5) != 1) o.fail("ratio 1.25 does not score 1");
    const PairSignals identity{"x", "x#rec", 4, 4, 1.0, StructureVerdict::kPreserved, 17, 17};
    const double total = evaluate_pair(identity, cfg).total;
    if (total != 3.0) o.fail("identity total " + fmt("%.17g", total));
    if (o.pass) o.detail = "1000 tuples exact, boundaries inclusive, identity total 3";
    return o;
}

// --- GRPO ---------------------------------------------------------------------

Outcome grpo_math() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    double worst_mean = 0, worst_std = 0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> g(8);
        const double spread = std::pow(10.0, std::uniform_real_distribution<double>(-3, 3)(rng));
        for (auto& x : g) x = spread * std::normal_distribution<double>()(rng);
        const auto a = grpo::advantages(g);
        worst_mean = std::max(worst_mean, std::abs(oracle::mean(a)));
        worst_std = std::max(worst_std, std::abs(oracle::population_std(a) - 1.0));
    }
    if (worst_mean > 1e-9 || worst_std > 1e-9) o.fail("advantage moments off by " + fmt("%.3g", std::max(worst_mean, worst_std)));

    // Central differences; batches whose ratios sit within 1e-3 of a clip
    // boundary are redrawn, since the objective has a kink there.
    grpo::GrpoConfig cfg;
    double worst_rel = 0;
    int redrawn = 0;
    for (int p = 0; p < 100; ++p) {
        std::mt19937_64 prng(1000 + p);
        for (;;) {
            const auto ratio_ref = fixture::random_policy(prng, 4, 6, 4, 1.0);
            auto policy = ratio_ref;
            for (auto& x : policy.logits()) x += std::normal_distribution<double>(0, 0.1)(prng);
            const auto kl_ref = fixture::random_policy(prng, 4, 6, 4, 1.0);
            const auto batch = fixture::random_batch(prng, policy, 4, cfg.n_rollouts);
            if (fixture::kink_distance(batch, policy, ratio_ref, cfg.epsilon) < 1e-3) {
                ++redrawn;
                continue;
            }
            const auto an = grpo::batch_gradient(batch, policy, ratio_ref, kl_ref, cfg);
            const auto fd = oracle::central_difference(
                [&](const std::vector<double>& x) {
                    grpo::ToyPolicy q = policy;
                    std::copy(x.begin(), x.end(), q.logits().begin());
                    return grpo::batch_objective(batch, q, ratio_ref, kl_ref, cfg);
                },
                std::vector<double>(policy.logits().begin(), policy.logits().end()), 1e-5);
            double scale = 0;
            for (double g : an.gradient) scale = std::max(scale, std::abs(g));
            for (std::size_t i = 0; i < fd.size(); ++i)
                worst_rel = std::max(worst_rel, std::abs(fd[i] - an.gradient[i]) / std::max(scale, 1e-12));
            break;
        }
    }
    if (worst_rel >= 1e-5) o.fail("gradient relative error " + fmt("%.3g", worst_rel));

    double min_kl = INFINITY, self_kl = 0;
    for (int k = 0; k < 200; ++k) {
        const auto a = fixture::random_policy(rng, 3, 8, 2, 3.0);
        const auto b = fixture::random_policy(rng, 3, 8, 2, 3.0);
        for (std::size_t s = 0; s < 3; ++s) {
            min_kl = std::min(min_kl, grpo::kl_penalty(a, b, s));
            self_kl = std::max(self_kl, grpo::kl_penalty(a, a, s));
        }
    }
    if (min_kl < 0) o.fail("negative KL");
    if (self_kl != 0) o.fail("KL at base is " + fmt("%.3g", self_kl));
    const double s = seconds_since(t0);
    if (s >= 60) o.fail("runtime " + fmt("%.1f s", s));
    if (o.pass)
        o.detail = "advantage moments within " + fmt("%.1e", std::max(worst_mean, worst_std)) + ", gradient rel err " +
                   fmt("%.2e", worst_rel) + " (" + std::to_string(redrawn) + " batches redrawn), KL>=0, KL(base)=0, " +
                   fmt("%.2f s", s);
    return o;
}

Outcome grpo_dynamics() {
    Outcome o;
    const auto t0 = Clock::now();
    double worst_gain = INFINITY;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        grpo::LabConfig cfg;
        cfg.seed = seed;
        cfg.steps = 200;
        const auto r = grpo::run_lab(cfg);
        std::vector<double> at;
        for (const auto& p : r.curve)
            if (p.step % 50 == 0) at.push_back(p.means.total);
        if (at.size() != 5) {
            o.fail("seed " + std::to_string(seed) + ": missing checkpoints");
            continue;
        }
        const double gain = at.back() - at.front();
        worst_gain = std::min(worst_gain, gain / r.attainable_range);
        if (gain < 0.5 * r.attainable_range)
            o.fail("seed " + std::to_string(seed) + ": gain " + fmt("%.3f", gain));
        for (std::size_t i = 1; i < at.size(); ++i)
            if (at[i] < at[i - 1]) o.fail("seed " + std::to_string(seed) + ": reward fell at step " + std::to_string(50 * i));
    }
    const double s = seconds_since(t0);
    if (s >= 120) o.fail("runtime " + fmt("%.1f s", s));
    if (o.pass) o.detail = "5/5 seeds, smallest gain " + fmt("%.0f%%", 100 * worst_gain) + " of range, " + fmt("%.2f s", s);
    return o;
}

// --- greedy matching -----------------------------------------------------------

Outcome greedy_matching() {
    Outcome o;
    std::mt19937_64 rng(606);
    std::normal_distribution<double> g;
    auto rows = [&](std::size_t n, std::size_t dim) {
        oracle::Matrix m(n, std::vector<double>(dim));
        for (auto& r : m)
            for (auto& x : r) x = g(rng);
        return m;
    };
    auto embed = [](const oracle::Matrix& m, std::size_t dim) {
        EmbeddedText t("t", dim);
        for (const auto& r : m) t.push_back(r);
        return t;
    };
    for (int k = 0; k < 500; ++k) {
        const std::size_t dim = 1 + rng() % 6;
        const auto r = rows(1 + rng() % 6, dim), c = rows(1 + rng() % 6, dim);
        const auto er = embed(r, dim), ec = embed(c, dim);
        const auto got = greedy_match_f1(er, ec);
        const auto want = oracle::greedy_match(r, c);
        if (got.precision != want.p || got.recall != want.r || got.f1 != want.f)
            o.fail("instance " + std::to_string(k) + " differs from exhaustive matching");
        const auto swapped = greedy_match_f1(ec, er);
        if (swapped.precision != got.recall || swapped.recall != got.precision || swapped.f1 != got.f1)
            o.fail("instance " + std::to_string(k) + " breaks swap symmetry");
        const auto self = greedy_match_f1(er, er);
        if (self.f1 != 1.0) o.fail("identity F1 " + fmt("%.17g", self.f1));
    }
    if (o.pass) o.detail = "500 instances exact, identity F1 = 1, P/R swap exact";
    return o;
}

// --- chunking ---------------------------------------------------------------------

Outcome chunking() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1010);
    std::size_t chunks = 0;
    std::uint64_t largest = 0;
    for (int k = 0; k < 1000; ++k) {
        const auto doc = fixture::random_document(rng, 10000);
        const auto counter = k % 2 ? TokenCounter::kBytesDiv4 : TokenCounter::kWhitespaceWords;
        const auto pieces = chunk(doc, counter, 2048);
        chunks += pieces.size();
        if (join_chunks(pieces) != doc) o.fail("document " + std::to_string(k) + " does not round-trip");
        for (const auto& p : pieces) {
            const auto n = count_tokens(p.text, counter);
            largest = std::max(largest, n);
            if (n > 2048) o.fail("document " + std::to_string(k) + " has a chunk of " + std::to_string(n) + " tokens");
        }
    }
    if (o.pass)
        o.detail = "1000 documents, " + std::to_string(chunks) + " chunks, largest " + std::to_string(largest) +
                   " tokens, " + fmt("%.2f s", seconds_since(t0));
    return o;
}

// --- prompt anchors -------------------------------------------------------------------

Outcome prompt_anchors() {
    Outcome o;
    const std::string sample = "An organic sample.\nSecond line.";
    const auto repro = render(PromptTemplate::builtin("repro"), {{"Organic Text", sample}});
    const auto dataman = render(PromptTemplate::builtin("dataman"), {{"Text", sample}});
    const auto structure =
        render(PromptTemplate::builtin("structure"), {{"Organic Text", sample}, {"Recycled Text", sample}});
    if (repro.find("Here is a paraphrased version:") == std::string::npos) o.fail("repro anchor missing");
    if (dataman.find("[14]Overall Score") == std::string::npos) o.fail("dataman anchor missing");
    if (structure.find("Output **only** `1`") == std::string::npos) o.fail("structure anchor missing");
    if (repro.find(sample) == std::string::npos || dataman.find(sample) == std::string::npos)
        o.fail("sample text not substituted");
    if (o.pass) o.detail = "repro, dataman and structure anchors present";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"budget-prefix", budget_prefix},  {"constants", constants},
        {"reward-math", reward_math},      {"grpo-math", grpo_math},
        {"grpo-dynamics", grpo_dynamics},  {"greedy-matching", greedy_matching},
        {"chunking", chunking},            {"prompt-anchors", prompt_anchors},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
