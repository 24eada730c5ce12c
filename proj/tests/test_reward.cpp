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
#include "oracles.hpp"
#include "recycle/errors.hpp"
#include "recycle/reward.hpp"

using namespace recycle;

namespace {

PairSignals random_signals(std::mt19937_64& rng, int i) {
    PairSignals s;
    s.organic_id = "o" + std::to_string(i);
    s.recycled_id = s.organic_id + "#rec";
    s.quality_organic = static_cast<double>(1 + rng() % 5);
    s.quality_recycled = static_cast<double>(1 + rng() % 5);
    // Bias similarity and length onto their thresholds now and then.
    switch (rng() % 4) {
        case 0: s.similarity = 0.65; break;
        case 1: s.similarity = std::nextafter(0.65, 0.0); break;
        default: s.similarity = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    }
    s.verdict = rng() % 2 ? StructureVerdict::kPreserved : StructureVerdict::kNotPreserved;
    s.len_organic = 1 + rng() % 400;
    switch (rng() % 3) {
        case 0: s.len_recycled = s.len_organic * 5 / 4; break;
        default: s.len_recycled = rng() % (2 * s.len_organic + 1);
    }
    return s;
}

oracle::RewardTuple tuple_of(const PairSignals& s) {
    return {static_cast<int>(s.quality_organic), static_cast<int>(s.quality_recycled), s.similarity,
            s.verdict == StructureVerdict::kPreserved, s.len_organic, s.len_recycled};
}

}  // namespace

TEST_SUITE("reward") {

TEST_CASE("dataman delta") {
    CHECK(dataman_reward(3, 5) == 2.0);
    CHECK(dataman_reward(5, 3) == -2.0);
    CHECK(dataman_reward(4, 4) == 0.0);
    CHECK_THROWS_AS(dataman_reward(0, 3), ValidationError);
    CHECK_THROWS_AS(dataman_reward(3, 6), ValidationError);
    CHECK(continuous_quality_reward(0.25, 0.75) == 0.5);
    CHECK_THROWS_AS(continuous_quality_reward(std::nan(""), 0.5), ValidationError);
}

TEST_CASE("indicator boundaries are inclusive") {
    CHECK(bertscore_reward(0.65) == 1);
    CHECK(bertscore_reward(std::nextafter(0.65, 0.0)) == 0);
    CHECK(bertscore_reward(1.0) == 1);
    CHECK(bertscore_reward(-1.0) == 0);
    CHECK_THROWS_AS(bertscore_reward(1.5), ValidationError);
    CHECK_THROWS_AS(bertscore_reward(std::nan("")), ValidationError);

    CHECK(length_reward(100, 125) == 1);
    CHECK(length_reward(100, 126) == 0);
    CHECK(length_reward(4, 5) == 1);
    CHECK(length_reward(4, 6) == 0);
    CHECK(length_reward(10, 0) == 1);
    CHECK_THROWS_AS(length_reward(0, 5), DegenerateInputError);

    CHECK(structure_reward(StructureVerdict::kPreserved) == 1);
    CHECK(structure_reward(StructureVerdict::kNotPreserved) == 0);
}

TEST_CASE("identity rephrasing totals 3") {
    PairSignals s{"a", "a#rec", 4, 4, 1.0, StructureVerdict::kPreserved, 10, 10};
    const auto b = evaluate_pair(s, RewardConfig{});
    CHECK(b.r_dataman == 0.0);
    CHECK(b.r_bertscore == 1);
    CHECK(b.r_structure == 1);
    CHECK(b.r_length == 1);
    CHECK(b.total == 3.0);
    CHECK(b.inputs_digest == pair_digest("a", "a#rec"));
    CHECK(b.inputs_digest.size() == 16);
}

TEST_CASE("total matches the weighted sum") {
    std::mt19937_64 rng(3);
    const RewardConfig cfg;
    oracle::Weights w;
    for (int i = 0; i < 1000; ++i) {
        const auto s = random_signals(rng, i);
        CHECK(evaluate_pair(s, cfg).total == doctest::Approx(oracle::reward_total(tuple_of(s), w)).epsilon(1e-12));
    }

    RewardConfig alt;
    alt.lambda_dataman = 0.5;
    alt.lambda_length = 2.0;
    alt.tau_bertscore = 0.8;
    alt.tau_length = 1.0;
    oracle::Weights wa{0.5, 1, 1, 2, 0.8, 1.0};
    for (int i = 0; i < 200; ++i) {
        const auto s = random_signals(rng, i);
        CHECK(evaluate_pair(s, alt).total == doctest::Approx(oracle::reward_total(tuple_of(s), wa)).epsilon(1e-12));
    }
}

TEST_CASE("evaluate_batch matches serial and reports the first error") {
    std::mt19937_64 rng(8);
    std::vector<PairSignals> pairs;
    for (int i = 0; i < 3000; ++i) pairs.push_back(random_signals(rng, i));
    const auto par = evaluate_batch(pairs, RewardConfig{});
    const auto ser = evaluate_batch_serial(pairs, RewardConfig{});
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(par[i].total == ser[i].total);
        CHECK(par[i].recycled_id == ser[i].recycled_id);
    }

    pairs[10].len_organic = 0;
    pairs[20].quality_organic = 2.5;
    CHECK_THROWS_AS(evaluate_batch(pairs, RewardConfig{}), DegenerateInputError);
}

TEST_CASE("config validation and json") {
    RewardConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(RewardConfig::from_json(c.to_json()) == c);
    c.tau_length = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RewardConfig{};
    c.lambda_bertscore = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RewardConfig{};
    c.tau_bertscore = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("breakdown records") {
    PairSignals s{"a", "a#rec", 3, 5, 0.9, StructureVerdict::kPreserved, 10, 20};
    const auto b = evaluate_pair(s, RewardConfig{});
    CHECK(b.total == 8.0);
    std::ostringstream out;
    write_breakdowns(out, std::vector<RewardBreakdown>{b});
    const auto j = nlohmann::json::parse(out.str());
    CHECK(j["organic_id"] == "a");
    CHECK(j["r_length"] == 0);
    CHECK(j["total"] == 8.0);
}

}  // TEST_SUITE
