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


#include <random>
#include <sstream>

#include "doctest.h"
#include "grpo_fixture.hpp"
#include "oracles.hpp"
#include "recycle/errors.hpp"
#include "recycle/grpo.hpp"

using namespace recycle;
using namespace recycle::grpo;

TEST_SUITE("grpo") {

TEST_CASE("advantages") {
    const std::vector<double> r{1, 2, 3};
    const auto a = advantages(r);
    CHECK(a[0] == doctest::Approx(-1.22474).epsilon(1e-5));
    CHECK(a[1] == doctest::Approx(0.0));
    CHECK(a[2] == doctest::Approx(1.22474).epsilon(1e-5));

    const std::vector<double> flat(8, 2.5);
    for (double x : advantages(flat)) CHECK(x == 0.0);
    CHECK_THROWS_AS(advantages(std::vector<double>{1.0}), ValidationError);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> g(2 + rng() % 10);
        for (auto& x : g) x = u(rng);
        const auto adv = advantages(g);
        CHECK(oracle::mean(adv) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
        CHECK(oracle::population_std(adv) == doctest::Approx(1.0).epsilon(1e-12));
        const double mu = oracle::mean(g), sd = oracle::population_std(g);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(adv[i] == doctest::Approx((g[i] - mu) / sd).epsilon(1e-12));
    }
}

TEST_CASE("clipped term") {
    CHECK(clipped_term(1.5, 1.0, 0.2) == doctest::Approx(1.2));
    CHECK(clipped_term(1.5, -1.0, 0.2) == doctest::Approx(-1.5));
    CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
    CHECK(clipped_term(0.5, 1.0, 0.2) == doctest::Approx(0.5));
    CHECK(clipped_term(1.1, 2.0, 0.2) == doctest::Approx(2.2));
    CHECK_THROWS_AS(clipped_term(0.0, 1.0, 0.2), ValidationError);
}

TEST_CASE("exact KL") {
    ToyPolicy p(1, 2, 1), q(1, 2, 1);
    p.logit(0, 0) = std::log(0.5);
    p.logit(0, 1) = std::log(0.5);
    q.logit(0, 0) = std::log(0.9);
    q.logit(0, 1) = std::log(0.1);
    CHECK(kl_penalty(p, q, 0) == doctest::Approx(0.51083).epsilon(1e-5));
    CHECK(kl_penalty(p, p, 0) == 0.0);

    std::mt19937_64 rng(6);
    for (int k = 0; k < 100; ++k) {
        const auto a = fixture::random_policy(rng, 3, 5, 2, 2.0);
        const auto b = fixture::random_policy(rng, 3, 5, 2, 2.0);
        for (std::size_t s = 0; s < 3; ++s) {
            const double want = oracle::kl_exact(a.logits().data() + s * 5, b.logits().data() + s * 5, 5);
            CHECK(kl_penalty(a, b, s) == doctest::Approx(want).epsilon(1e-12));
            CHECK(kl_penalty(a, b, s) >= 0.0);
            CHECK(kl_penalty(a, a, s) == 0.0);
        }
    }
    CHECK_THROWS_AS(kl_penalty(ToyPolicy(1, 3, 1), q, 0), ValidationError);
}

TEST_CASE("softmax policy") {
    ToyPolicy p(2, 4, 3);
    for (double x : p.probs(0)) CHECK(x == doctest::Approx(0.25));
    p.logit(1, 2) = 800.0;  // max-subtraction keeps this finite
    const auto pr = p.probs(1);
    CHECK(pr[2] == doctest::Approx(1.0));
    const std::vector<int> st{0, 0, 1}, out{1, 3, 2};
    CHECK(p.sequence_log_prob(st, out) == doctest::Approx(2 * std::log(0.25)));
    CHECK_THROWS_AS(p.sequence_log_prob(st, std::vector<int>{1}), ValidationError);
    CHECK_THROWS_AS(ToyPolicy(1, 65, 2), ValidationError);
    CHECK_THROWS_AS(ToyPolicy(1, 4, 17), ValidationError);

    std::uint64_t s1 = 99, s2 = 99;
    CHECK(p.sample(st, s1) == p.sample(st, s2));
    CHECK(s1 == s2);
}

TEST_CASE("objective by hand") {
    ToyPolicy pol(1, 2, 1), base(1, 2, 1);
    pol.logit(0, 0) = std::log(0.6);
    pol.logit(0, 1) = std::log(0.4);
    RolloutGroup g;
    g.input_id = "x";
    g.states = {0};
    g.outputs = {{0}, {1}};
    g.rewards = {1.0, 0.0};
    g.advantages = advantages(g.rewards);
    g.log_probs_current = {std::log(0.6), std::log(0.4)};
    g.log_probs_base = {std::log(0.5), std::log(0.5)};
    GrpoConfig cfg;
    const double kl = 0.6 * std::log(1.2) + 0.4 * std::log(0.8);
    const double want = 0.5 * (std::min(1.2 * 1.0, 1.2 * 1.0) - cfg.beta * kl) +
                        0.5 * (std::min(0.8 * -1.0, 0.8 * -1.0) - cfg.beta * kl);
    CHECK(grpo_objective(g, pol, base, cfg) == doctest::Approx(want).epsilon(1e-12));

    g.log_probs_base[0] = 0.0;
    CHECK_THROWS_AS(grpo_objective(g, pol, base, cfg), IntegrityError);
}

TEST_CASE("gradient matches central differences") {
    std::mt19937_64 rng(31);
    GrpoConfig cfg;
    cfg.beta = 0.05;  // large enough that the KL part is visible
    int checked = 0;
    while (checked < 40) {
        const auto ratio_ref = fixture::random_policy(rng, 3, 4, 3, 1.0);
        auto policy = ratio_ref;
        std::normal_distribution<double> jitter(0.0, 0.15);
        for (auto& x : policy.logits()) x += jitter(rng);
        const auto kl_ref = fixture::random_policy(rng, 3, 4, 3, 1.0);
        const auto batch = fixture::random_batch(rng, policy, 3, 8);
        if (fixture::kink_distance(batch, policy, ratio_ref, cfg.epsilon) < 1e-3) continue;
        ++checked;

        const auto an = batch_gradient(batch, policy, ratio_ref, kl_ref, cfg);
        CHECK(an.value == doctest::Approx(batch_objective(batch, policy, ratio_ref, kl_ref, cfg)).epsilon(1e-12));
        auto f = [&](const std::vector<double>& x) {
            ToyPolicy p = policy;
            std::copy(x.begin(), x.end(), p.logits().begin());
            return batch_objective(batch, p, ratio_ref, kl_ref, cfg);
        };
        const auto fd = oracle::central_difference(
            f, std::vector<double>(policy.logits().begin(), policy.logits().end()), 1e-5);
        for (std::size_t i = 0; i < fd.size(); ++i) CHECK(std::abs(fd[i] - an.gradient[i]) < 1e-7);
    }
}

TEST_CASE("parallel gradient equals serial") {
    std::mt19937_64 rng(12);
    const auto pol = fixture::random_policy(rng, 6, 8, 6, 1.0);
    const auto ref = fixture::random_policy(rng, 6, 8, 6, 1.0);
    const auto batch = fixture::random_batch(rng, pol, 40, 8);
    const auto a = batch_gradient(batch, pol, ref, ref, GrpoConfig{});
    const auto b = batch_gradient_serial(batch, pol, ref, ref, GrpoConfig{});
    CHECK(a.value == b.value);
    CHECK(a.gradient == b.gradient);

    auto broken = batch;
    broken[3].advantages.pop_back();
    CHECK_THROWS_AS(batch_gradient(broken, pol, ref, ref, GrpoConfig{}), ValidationError);
}

TEST_CASE("ascend improves a single group") {
    std::mt19937_64 rng(14);
    const auto base = fixture::random_policy(rng, 2, 4, 3, 0.5);
    const auto batch = fixture::random_batch(rng, base, 4, 8);
    GrpoConfig cfg;
    const double before = batch_objective(batch, base, base, base, cfg);
    const auto next = ascend(base, base, batch, cfg, 0.05);
    CHECK(batch_objective(batch, next, base, base, cfg) > before);
    CHECK_THROWS_AS(ascend(base, base, batch, cfg, -1.0), ValidationError);
}

TEST_CASE("make_group is seeded by input id") {
    const ToyPolicy pol(2, 4, 4);
    const TargetTokenTask task(0, RewardConfig{});
    RewardHandle h = [&](std::span<const int> in, std::span<const int> out) { return task(in, out); };
    const std::vector<int> st{0, 1, 0, 1};
    const auto a = make_group("in-1", st, pol, pol, h, GrpoConfig{}, 7);
    const auto b = make_group("in-1", st, pol, pol, h, GrpoConfig{}, 7);
    const auto c = make_group("in-2", st, pol, pol, h, GrpoConfig{}, 7);
    CHECK(a.outputs == b.outputs);
    CHECK(a.outputs.size() == 8);
    CHECK(a.outputs != c.outputs);
    CHECK(grpo_objective(a, pol, pol, GrpoConfig{}) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("target token task") {
    const TargetTokenTask task(0, RewardConfig{});
    const std::vector<int> in{1, 1, 1, 1}, all_target{0, 0, 0, 0}, none{1, 2, 3, 1};
    CHECK(task(in, in).total == doctest::Approx(3.0));
    CHECK(task(in, all_target).total > task(in, none).total);
    CHECK(task.attainable_range() == doctest::Approx(12.0));
    CHECK(TargetTokenTask::target_fraction(all_target, 0) == 1.0);
}

TEST_CASE("lab run is deterministic and learns") {
    LabConfig cfg;
    cfg.steps = 60;
    const auto a = run_lab(cfg);
    const auto b = run_lab(cfg);
    std::ostringstream sa, sb;
    write_curve(sa, a.curve);
    write_curve(sb, b.curve);
    CHECK(sa.str() == sb.str());
    REQUIRE(a.curve.size() >= 2);
    CHECK(a.curve.front().step == 0);
    CHECK(a.curve.back().means.total > a.curve.front().means.total + 2.0);
    CHECK(a.curve.front().means.kl == doctest::Approx(0.0).scale(1.0));
    CHECK(a.curve.back().means.kl > 0.0);
}

TEST_CASE("config round trips") {
    LabConfig cfg;
    cfg.ratio_reference = RatioReference::kFrozenBase;
    cfg.steps = 7;
    const auto back = LabConfig::from_json(cfg.to_json());
    CHECK(back.steps == 7);
    CHECK(back.ratio_reference == RatioReference::kFrozenBase);
    CHECK(back.grpo == cfg.grpo);
    CHECK(parse_ratio_reference("rollout-policy") == RatioReference::kRolloutPolicy);
    CHECK_THROWS_AS(parse_ratio_reference("old"), ConfigError);
    GrpoConfig g;
    g.n_rollouts = 1;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = GrpoConfig{};
    g.epsilon = 1.5;
    CHECK_THROWS_AS(g.validate(), ConfigError);
}

}  // TEST_SUITE
