#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mislc/errors.hpp"
#include "mislc/index.hpp"
#include "mislc/rng.hpp"

using namespace mislc;
namespace fs = std::filesystem;

namespace {

Chunk make_chunk(const std::string& id, const std::string& text) {
    return Chunk{id, "doc", 0, 1, text, 0};
}

// exhaustive scorer straight from the closed form, recounting df/tf/dl from
// the raw chunk texts
std::vector<std::pair<std::string, double>> brute_force_bm25(
    const std::vector<Chunk>& chunks, const std::string& query, double k1, double b) {
    WhitespacePunctTokenizer tok;
    std::vector<std::vector<std::string>> docs;
    for (const auto& c : chunks) {
        std::vector<std::string> terms;
        for (const auto& t : tok.tokenize(c.text)) terms.push_back(ascii_lower(t.text));
        docs.push_back(std::move(terms));
    }
    double avgdl = 0.0;
    for (const auto& d : docs) avgdl += static_cast<double>(d.size());
    avgdl /= static_cast<double>(docs.size());

    auto df = [&](const std::string& term) {
        size_t n = 0;
        for (const auto& d : docs) {
            if (std::find(d.begin(), d.end(), term) != d.end()) ++n;
        }
        return n;
    };

    std::vector<double> scores(docs.size(), 0.0);
    for (const auto& qt : tok.tokenize(query)) {
        const std::string term = ascii_lower(qt.text);
        const size_t d = df(term);
        if (d == 0) continue;
        const double idf =
            std::log(1.0 + (static_cast<double>(docs.size()) - d + 0.5) / (d + 0.5));
        for (size_t i = 0; i < docs.size(); ++i) {
            const double tf = std::count(docs[i].begin(), docs[i].end(), term);
            if (tf == 0.0) continue;
            const double dl = static_cast<double>(docs[i].size());
            scores[i] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
    }

    std::vector<size_t> order;
    for (size_t i = 0; i < docs.size(); ++i) {
        if (scores[i] > 0.0) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t c) {
        if (scores[a] != scores[c]) return scores[a] > scores[c];
        return a < c;
    });
    std::vector<std::pair<std::string, double>> out;
    for (size_t i : order) out.emplace_back(chunks[i].chunk_id, scores[i]);
    return out;
}

std::string random_text(Rng& rng, size_t max_terms) {
    static const char* vocab[] = {"law", "claim", "court", "news", "false",
                                  "troops", "vote", "food", "drug", "speech"};
    std::string text;
    const size_t n = 1 + rng.next_index(max_terms);
    for (size_t i = 0; i < n; ++i) {
        if (i > 0) text += ' ';
        text += vocab[rng.next_index(10)];
    }
    return text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("index") {
    TEST_CASE("hand-countable single chunk statistics") {
        WhitespacePunctTokenizer tok;
        const auto idx = PostingsIndex::build({make_chunk("c0", "a a b")}, tok);
        CHECK(idx.size() == 1);
        CHECK(idx.avgdl() == doctest::Approx(3.0));
        CHECK(idx.df("a") == 1);
        CHECK(idx.df("b") == 1);
        const auto& postings = idx.vocabulary().at("a");
        REQUIRE(postings.size() == 1);
        CHECK(postings[0].tf == 2);
        CHECK(postings[0].positions == std::vector<uint64_t>{0, 1});
        CHECK(idx.vocabulary().at("b")[0].positions == std::vector<uint64_t>{2});
    }

    TEST_CASE("closed-form score on the single-chunk corpus") {
        WhitespacePunctTokenizer tok;
        const auto idx =
            PostingsIndex::build({make_chunk("c0", "a a b")}, tok, Bm25Params{0.9, 0.4});
        const auto hits = idx.query("a", 1);
        REQUIRE(hits.size() == 1);
        // idf = ln(1 + (1 - 1 + 0.5)/(1 + 0.5)); tf part = 2*1.9/(2 + 0.9*1)
        const double expected = std::log(1.0 + 0.5 / 1.5) * 2.0 * 1.9 / (2.0 + 0.9);
        CHECK(hits[0].score == doctest::Approx(expected).epsilon(1e-12));
        CHECK(hits[0].score == doctest::Approx(0.3769627156).epsilon(1e-9));
    }

    TEST_CASE("duplicate chunk texts share postings shape") {
        WhitespacePunctTokenizer tok;
        const auto idx =
            PostingsIndex::build({make_chunk("c0", "a b"), make_chunk("c1", "a b")}, tok);
        CHECK(idx.df("a") == 2);
        const auto& postings = idx.vocabulary().at("a");
        CHECK(postings[0].tf == postings[1].tf);
        CHECK(postings[0].positions == postings[1].positions);
    }

    TEST_CASE("unknown query terms yield the empty list") {
        WhitespacePunctTokenizer tok;
        const auto idx = PostingsIndex::build({make_chunk("c0", "a a b")}, tok);
        CHECK(idx.query("zebra", 5).empty());
    }

    TEST_CASE("ties break by ascending ordinal") {
        WhitespacePunctTokenizer tok;
        const auto idx = PostingsIndex::build(
            {make_chunk("c0", "x y"), make_chunk("c1", "x y"), make_chunk("c2", "x y")}, tok);
        const auto hits = idx.query("x", 3);
        REQUIRE(hits.size() == 3);
        CHECK(hits[0].chunk_id == "c0");
        CHECK(hits[1].chunk_id == "c1");
        CHECK(hits[2].chunk_id == "c2");
    }

    TEST_CASE("empty corpus refuses to build") {
        WhitespacePunctTokenizer tok;
        CHECK_THROWS_AS(PostingsIndex::build({}, tok), EmptyCorpusError);
    }

    TEST_CASE("ranking equals the brute-force scorer on random corpora") {
        WhitespacePunctTokenizer tok;
        Rng rng(99);
        for (int round = 0; round < 25; ++round) {
            std::vector<Chunk> chunks;
            const size_t n = 1 + rng.next_index(20);
            for (size_t i = 0; i < n; ++i) {
                chunks.push_back(make_chunk("c" + std::to_string(i), random_text(rng, 12)));
            }
            const auto idx = PostingsIndex::build(chunks, tok, Bm25Params{0.9, 0.4});
            const std::string query = random_text(rng, 6);
            const auto mine = idx.query(query, n);
            const auto oracle = brute_force_bm25(chunks, query, 0.9, 0.4);
            REQUIRE(mine.size() == oracle.size());
            for (size_t i = 0; i < mine.size(); ++i) {
                CHECK(mine[i].chunk_id == oracle[i].first);
                CHECK(mine[i].score == doctest::Approx(oracle[i].second).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("tf monotonicity of the scoring formula") {
        Rng rng(5);
        for (int round = 0; round < 200; ++round) {
            const double k1 = 0.1 + rng.next_double() * 2.0;
            const double b = rng.next_double();
            const double dl = 1.0 + rng.next_index(100);
            const double avgdl = 1.0 + rng.next_index(100);
            const double idf = rng.next_double() * 3.0;
            auto score = [&](double tf) {
                return idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
            };
            const double tf = 1.0 + rng.next_index(20);
            CHECK(score(tf + 1.0) >= score(tf));
        }
    }

    TEST_CASE("save/load preserves query results and serializes bit-exactly") {
        WhitespacePunctTokenizer tok;
        Rng rng(123);
        std::vector<Chunk> chunks;
        for (size_t i = 0; i < 12; ++i) {
            chunks.push_back(make_chunk("c" + std::to_string(i), random_text(rng, 10)));
        }
        const auto idx = PostingsIndex::build(chunks, tok, Bm25Params{1.2, 0.75});

        const auto dir = fs::temp_directory_path() / "mislc_index_test";
        fs::remove_all(dir);
        idx.save(dir);
        const auto loaded = PostingsIndex::load(dir);
        CHECK(loaded.params().k1 == doctest::Approx(1.2));
        CHECK(loaded.avgdl() == doctest::Approx(idx.avgdl()).epsilon(1e-12));

        for (int round = 0; round < 10; ++round) {
            const std::string query = random_text(rng, 5);
            const auto a = idx.query(query, 12);
            const auto b = loaded.query(query, 12);
            REQUIRE(a.size() == b.size());
            for (size_t i = 0; i < a.size(); ++i) {
                CHECK(a[i].chunk_id == b[i].chunk_id);
                CHECK(a[i].score == doctest::Approx(b[i].score).epsilon(1e-12));
            }
        }

        const auto dir2 = fs::temp_directory_path() / "mislc_index_test2";
        fs::remove_all(dir2);
        loaded.save(dir2);
        CHECK(slurp(dir / "postings.bin") == slurp(dir2 / "postings.bin"));
        fs::remove_all(dir);
        fs::remove_all(dir2);
    }

    TEST_CASE("scores stay non-negative") {
        WhitespacePunctTokenizer tok;
        Rng rng(42);
        std::vector<Chunk> chunks;
        for (size_t i = 0; i < 30; ++i) {
            chunks.push_back(make_chunk("c" + std::to_string(i), random_text(rng, 8)));
        }
        const auto idx = PostingsIndex::build(chunks, tok);
        for (int round = 0; round < 20; ++round) {
            for (const auto& hit : idx.query(random_text(rng, 4), 30)) {
                CHECK(hit.score > 0.0);
            }
        }
    }
}
