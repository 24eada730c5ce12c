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
#include "helpers.hpp"
#include "recycle/corpus.hpp"
#include "recycle/errors.hpp"

using namespace recycle;

TEST_SUITE("corpus") {

TEST_CASE("count_tokens by definition") {
    CHECK(count_tokens("hello world", TokenCounter::kWhitespaceWords) == 2);
    CHECK(count_tokens("", TokenCounter::kWhitespaceWords) == 0);
    CHECK(count_tokens("", TokenCounter::kBytesDiv4) == 0);
    CHECK(count_tokens(std::string(4000, 'a'), TokenCounter::kBytesDiv4) == 1000);
    CHECK(count_tokens(std::string(7, 'a'), TokenCounter::kBytesDiv4) == 1);
    CHECK(count_tokens("  \n\t ", TokenCounter::kWhitespaceWords) == 0);
    CHECK(count_tokens(" a\tb\nc  ", TokenCounter::kWhitespaceWords) == 3);
}

TEST_CASE("counter names") {
    CHECK(parse_counter("whitespace-words") == TokenCounter::kWhitespaceWords);
    CHECK(parse_counter("bytes-div-4") == TokenCounter::kBytesDiv4);
    CHECK(counter_name(TokenCounter::kBytesDiv4) == "bytes-div-4");
    CHECK_THROWS_AS(parse_counter("tiktoken"), ConfigError);
}

TEST_CASE("ingest two records") {
    std::istringstream in(R"({"id":"a","text":"one two"})"
                          "\n"
                          R"({"id":"b","text":"three","source":"organic"})"
                          "\n");
    const auto pool = ingest(in, TokenCounter::kWhitespaceWords);
    CHECK(pool.manifest().doc_count == 2);
    CHECK(pool.manifest().total_tokens == 3);
    CHECK(pool.documents()[1].source == std::optional<std::string>("organic"));
}

TEST_CASE("ingest empty stream") {
    std::istringstream in("");
    const auto pool = ingest(in, TokenCounter::kBytesDiv4);
    CHECK(pool.manifest().doc_count == 0);
    CHECK(pool.manifest().total_tokens == 0);
}

TEST_CASE("malformed line carries its 1-based number") {
    std::istringstream in("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\",\"text\":\"y\"}\nnot json\n");
    try {
        ingest(in, TokenCounter::kWhitespaceWords);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream missing_text("{\"id\":\"a\"}\n");
    CHECK_THROWS_AS(ingest(missing_text, TokenCounter::kWhitespaceWords), ParseError);
}

TEST_CASE("duplicate id is named") {
    std::istringstream in("{\"id\":\"dup\",\"text\":\"x\"}\n{\"id\":\"dup\",\"text\":\"y\"}\n");
    try {
        ingest(in, TokenCounter::kWhitespaceWords);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("dup") != std::string::npos);
    }
}

TEST_CASE("emit counts records") {
    Pool pool("p", TokenCounter::kWhitespaceWords);
    std::ostringstream empty;
    CHECK(emit(pool, empty) == 0);
    for (int i = 0; i < 5; ++i) pool.add(Document::make("d" + std::to_string(i), "w", TokenCounter::kWhitespaceWords));
    std::ostringstream out;
    CHECK(emit(pool, out) == 5);
}

TEST_CASE("emit then ingest preserves every field on random pools") {
    std::mt19937_64 rng(17);
    const std::vector<std::string> pieces = {"alpha", "β", "\xe6\x97\xa5\xe6\x9c\xac", " ", "\n", "\t", "\"q\"", "\\", "😀", "."};
    for (int round = 0; round < 50; ++round) {
        const auto counter = round % 2 ? TokenCounter::kBytesDiv4 : TokenCounter::kWhitespaceWords;
        Pool pool("p", counter);
        const int n = static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            std::string text;
            const int len = static_cast<int>(rng() % 30);
            for (int k = 0; k < len; ++k) text += pieces[rng() % pieces.size()];
            auto doc = Document::make("id-" + std::to_string(round) + "-" + std::to_string(i), text, counter,
                                      rng() % 2 ? std::optional<std::string>("organic") : std::nullopt);
            if (rng() % 3 == 0) doc.extra["url"] = "https://example.org/" + std::to_string(i);
            pool.add(std::move(doc));
        }
        std::ostringstream out;
        emit(pool, out);
        std::istringstream in(out.str());
        const auto back = ingest(in, counter, "p");
        REQUIRE(back.size() == pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) CHECK(back.documents()[i] == pool.documents()[i]);
        CHECK(back.manifest() == pool.manifest());
    }
}

TEST_CASE("manifest tracks members") {
    Pool pool("org", TokenCounter::kWhitespaceWords);
    pool.add(Document::make("a", "x y z", TokenCounter::kWhitespaceWords));
    pool.add(Document::make("b", "x", TokenCounter::kWhitespaceWords));
    CHECK(pool.manifest().doc_count == 2);
    CHECK(pool.manifest().total_tokens == 4);
    CHECK_THROWS_AS(pool.add(Document::make("a", "again", TokenCounter::kWhitespaceWords)), ValidationError);
    CHECK(pool.manifest().doc_count == 2);
}

TEST_CASE("manifest json round trip") {
    PoolManifest m;
    m.doc_count = 3;
    m.total_tokens = 12;
    m.source_label = "rec_hq.jsonl";
    m.counter = "bytes-div-4";
    m.created_from = {"rec.jsonl"};
    m.threshold_applied = 0.5;
    m.target_tokens = 10;
    m.shortfall = 0;
    m.overshoot = 2;
    m.failures = {"x"};
    CHECK(PoolManifest::from_json(m.to_json()) == m);
    CHECK(m.to_json().contains("parents"));

    PoolManifest bare;
    CHECK(bare.to_json()["threshold_applied"].is_null());
    CHECK(PoolManifest::from_json(bare.to_json()) == bare);
}

TEST_CASE("file helpers") {
    testing::TempDir dir("corpus");
    Pool pool("x", TokenCounter::kWhitespaceWords);
    pool.add(Document::make("a", "one two", TokenCounter::kWhitespaceWords));
    const auto path = dir.file("pool.jsonl");
    CHECK(emit_file(pool, path) == 1);
    write_manifest_file(pool.manifest(), manifest_path_for(path));
    CHECK(read_manifest_file(manifest_path_for(path)) == pool.manifest());
    CHECK(ingest_file(path, TokenCounter::kWhitespaceWords, "x").documents() == pool.documents());
    CHECK_THROWS_AS(ingest_file(dir.file("missing.jsonl"), TokenCounter::kWhitespaceWords), IoError);
    CHECK_THROWS_AS(emit_file(pool, dir.file("no/such/dir/out.jsonl")), IoError);
}

}  // TEST_SUITE
