#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "plc/ragcore.hpp"

using namespace plc;
namespace fs = std::filesystem;

namespace {

// Test-local FNV-1a, transcribed independently of plc::text.
std::uint64_t local_fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Brute-force scorer over all chunks: independent cosine, same tie-break.
std::vector<rag::SearchHit> brute_force_topk(const rag::VectorStore& store,
                                             const std::string& query, std::size_t k) {
    rag::EmbeddingVector q = rag::embed(query);
    if (q.is_zero()) return {};
    std::vector<rag::SearchHit> hits;
    for (const auto& chunk : store.all_chunks()) {
        double dot = 0.0;
        double qn = 0.0;
        double cn = 0.0;
        for (std::size_t i = 0; i < rag::kEmbeddingDim; ++i) {
            dot += q.values[i] * chunk.embedding.values[i];
            qn += q.values[i] * q.values[i];
            cn += chunk.embedding.values[i] * chunk.embedding.values[i];
        }
        double denom = std::sqrt(qn) * std::sqrt(cn);
        hits.push_back(rag::SearchHit{chunk, denom == 0.0 ? 0.0 : dot / denom});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.chunk.doc_id != b.chunk.doc_id) return a.chunk.doc_id < b.chunk.doc_id;
        return a.chunk.seq < b.chunk.seq;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace

TEST_CASE("chunk windows advance by size minus overlap") {
    std::string body(120, 'x');
    for (std::size_t i = 0; i < body.size(); ++i) body[i] = static_cast<char>('a' + i % 26);
    auto chunks = rag::chunk_text(body, 100, 20);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0] == body.substr(0, 100));
    CHECK(chunks[1] == body.substr(80, 40));
}

TEST_CASE("chunking edge cases") {
    CHECK(rag::chunk_text("").empty());
    auto single = rag::chunk_text(std::string(50, 'a'), 500, 50);
    REQUIRE(single.size() == 1);
    CHECK(single[0].size() == 50);
    // A body exactly one window long produces exactly one chunk.
    CHECK(rag::chunk_text(std::string(100, 'a'), 100, 20).size() == 1);
    CHECK_THROWS_AS(rag::chunk_text("abc", 10, 10), ConfigError);
    CHECK_THROWS_AS(rag::chunk_text("abc", 0, 0), ConfigError);
}

TEST_CASE("non-overlapping chunk prefixes reconstruct the body") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> len_dist(0, 2000);
    for (int i = 0; i < 50; ++i) {
        std::string body;
        int len = len_dist(rng);
        for (int j = 0; j < len; ++j) body.push_back(static_cast<char>('a' + (j * 7 + i) % 26));
        std::size_t size = 100;
        std::size_t overlap = 30;
        auto chunks = rag::chunk_text(body, size, overlap);
        std::string rebuilt;
        for (std::size_t c = 0; c < chunks.size(); ++c) {
            if (c + 1 < chunks.size()) {
                rebuilt += chunks[c].substr(0, size - overlap);
            } else {
                rebuilt += chunks[c];
            }
        }
        CHECK(rebuilt == body);
    }
}

TEST_CASE("embedding is deterministic and unit-length") {
    auto a = rag::embed("how to stay warm in winter");
    auto b = rag::embed("how to stay warm in winter");
    CHECK(a.values == b.values);
    CHECK(rag::cosine(a, b) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(a.norm() - 1.0) < 1e-6);
}

TEST_CASE("token-free text embeds to the reserved zero vector") {
    CHECK(rag::embed("").is_zero());
    CHECK(rag::embed("?!...").is_zero());
    CHECK(rag::cosine(rag::embed(""), rag::embed("words")) == 0.0);
}

TEST_CASE("disjoint vocabularies with disjoint bins have cosine zero") {
    // Verify bin-disjointness by brute-force hashing first, with a local
    // FNV-1a implementation, then assert exact orthogonality.
    const std::vector<std::string> vocab_a = {"winter", "garden", "stove", "orchard"};
    const std::vector<std::string> vocab_b = {"resume", "payroll", "ballots", "commute"};
    std::set<std::uint64_t> bins_a, bins_b;
    for (const auto& w : vocab_a) bins_a.insert(local_fnv1a64(w) % rag::kEmbeddingDim);
    for (const auto& w : vocab_b) bins_b.insert(local_fnv1a64(w) % rag::kEmbeddingDim);
    for (auto bin : bins_a) REQUIRE(bins_b.count(bin) == 0);

    auto a = rag::embed("winter garden stove orchard");
    auto b = rag::embed("resume payroll ballots commute");
    CHECK(rag::cosine(a, b) == 0.0);
}

TEST_CASE("upsert grows, replaces atomically, and removes on empty") {
    rag::VectorStore store;
    store.upsert("d1", {"first chunk", "second chunk"});
    CHECK(store.size() == 2);
    store.upsert("d1", {"only chunk"});
    CHECK(store.size() == 1);
    CHECK(store.chunks_for("d1").size() == 1);
    CHECK(store.chunks_for("d1")[0].text == "only chunk");
    store.upsert("d2", {});
    CHECK(store.doc_ids() == std::vector<std::string>{"d1"});
    store.upsert("d1", {});
    CHECK(store.empty());
}

TEST_CASE("retrieval ranks the on-topic chunk first") {
    rag::VectorStore store;
    store.upsert("poison-doc", {"winter heating advice lives here"});
    store.upsert("other", {"completely unrelated pottery notes"});
    auto hits = store.retrieve("how to stay warm in winter", 3);
    REQUIRE(!hits.empty());
    CHECK(hits[0].chunk.doc_id == "poison-doc");
    CHECK(hits[0].score > 0.0);
}

TEST_CASE("retrieval edge cases") {
    rag::VectorStore empty_store;
    CHECK(empty_store.retrieve("anything").empty());

    rag::VectorStore store;
    store.upsert("b", {"identical text"});
    store.upsert("a", {"identical text"});
    auto hits = store.retrieve("identical text", 5);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].chunk.doc_id == "a");  // tie-break (doc_id, seq) ascending
    CHECK(hits[1].chunk.doc_id == "b");
    CHECK(hits[0].score == doctest::Approx(1.0));

    CHECK(store.retrieve("???").empty());  // zero-vector query
    CHECK_THROWS_AS(store.retrieve("x", 0), ConfigError);
}

TEST_CASE("retrieval agrees with a brute-force scorer on a random corpus") {
    const std::vector<std::string> words = {"winter", "garden", "stove",  "orchard", "resume",
                                            "payroll", "ballot", "commute", "trail",  "lantern"};
    std::mt19937 rng(21);
    std::uniform_int_distribution<int> word_count(3, 12);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    rag::VectorStore store;
    for (int d = 0; d < 12; ++d) {
        std::vector<std::string> chunks;
        for (int c = 0; c < 3; ++c) {
            std::string chunk;
            int n = word_count(rng);
            for (int w = 0; w < n; ++w) {
                if (!chunk.empty()) chunk += " ";
                chunk += words[pick(rng)];
            }
            chunks.push_back(chunk);
        }
        store.upsert("doc" + std::to_string(d), chunks);
    }
    for (int q = 0; q < 30; ++q) {
        std::string query = words[pick(rng)] + " " + words[pick(rng)] + " " + words[pick(rng)];
        auto expected = brute_force_topk(store, query, 5);
        auto actual = store.retrieve(query, 5);
        REQUIRE(actual.size() == expected.size());
        double previous = 2.0;
        for (std::size_t i = 0; i < actual.size(); ++i) {
            CHECK(actual[i].chunk.doc_id == expected[i].chunk.doc_id);
            CHECK(actual[i].chunk.seq == expected[i].chunk.seq);
            CHECK(actual[i].score == doctest::Approx(expected[i].score).epsilon(1e-9));
            CHECK(actual[i].score >= -1.0);
            CHECK(actual[i].score <= 1.0);
            CHECK(actual[i].score <= previous);
            previous = actual[i].score;
        }
    }
}

TEST_CASE("store snapshots round-trip through disk") {
    auto dir = fs::temp_directory_path() / "plc-rag-tests";
    fs::create_directories(dir);
    auto path = dir / "store.json";

    rag::VectorStore store;
    store.upsert("d1", {"alpha beta", "gamma"});
    store.upsert("d2", {"delta"});
    store.save(path);

    auto loaded = rag::VectorStore::load(path);
    CHECK(loaded.size() == 3);
    CHECK(loaded.chunks_for("d1")[1].text == "gamma");
    auto before = store.retrieve("alpha", 2);
    auto after = loaded.retrieve("alpha", 2);
    REQUIRE(before.size() == after.size());
    CHECK(before[0].chunk.text == after[0].chunk.text);

    std::ofstream bad(dir / "bad.json");
    bad << "{\"format\": \"something-else\", \"version\": 1, \"docs\": []}";
    bad.close();
    CHECK_THROWS_AS(rag::VectorStore::load(dir / "bad.json"), FormatError);
    CHECK_THROWS_AS(rag::VectorStore::load(dir / "missing.json"), IoError);
}

TEST_CASE("trigger matching is token-exact and priority-ordered") {
    std::vector<rag::TriggerRule> rules = {
        {{"winter"}, "doc-w", 2},
        {{"warm", "heater"}, "doc-h", 1},
    };
    auto matched = rag::match_triggers("how to stay warm in winter", rules);
    REQUIRE(matched.size() == 2);
    CHECK(matched[0].doc_id == "doc-h");  // priority 1 first
    CHECK(matched[1].doc_id == "doc-w");

    CHECK(rag::match_triggers("hello", rules).empty());
    CHECK(rag::match_triggers("winterize the shed", rules).empty());  // not a whole token
}

TEST_CASE("prompt template validation") {
    CHECK_THROWS_AS(rag::PromptTemplate::from_text("no placeholders"), ConfigError);
    CHECK_THROWS_AS(rag::PromptTemplate::from_text("{context} only"), ConfigError);
    CHECK_THROWS_AS(rag::PromptTemplate::from_text("{context} {question} {question}"),
                    ConfigError);
    auto t = rag::PromptTemplate::from_text("C:{context}\nQ:{question}");
    CHECK(t.body() == "C:{context}\nQ:{question}");
}

TEST_CASE("prompt assembly substitutes in place") {
    auto t = rag::PromptTemplate::from_text("C:{context}\nQ:{question}");
    rag::Chunk x;
    x.doc_id = "d";
    x.seq = 0;
    x.text = "X";
    CHECK(t.assemble({x}, "Y") == "C:X\nQ:Y");
    CHECK(t.assemble({}, "Y") == "C:\nQ:Y");

    rag::Chunk a = x, b = x;
    a.text = "A";
    b.text = "B";
    b.seq = 1;
    CHECK(t.assemble({a, b}, "q") == "C:A\n\nB\nQ:q");

    // Substituted text is never re-scanned: a query containing a placeholder
    // lands verbatim.
    CHECK(t.assemble({}, "{context}") == "C:\nQ:{context}");
}

TEST_CASE("shipped default template hosts context before question") {
    auto t = rag::PromptTemplate::load(PLC_FIXTURES_DIR "/template.txt");
    CHECK(t.body().find("{context}") < t.body().find("{question}"));
}
