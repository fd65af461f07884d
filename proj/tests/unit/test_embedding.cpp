#include <doctest.h>

#include "mmgraph/embedding.hpp"
#include "mmgraph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

using namespace mmgraph;

TEST_CASE("test embedder is deterministic across instances") {
    TestEmbedder a(7);
    TestEmbedder b(7);
    CHECK(a.embed_text("alpha") == b.embed_text("alpha"));
    CHECK(a.embed_text("alpha") == a.embed_text("alpha")); // cache hit, bitwise
    TestEmbedder c(8);
    CHECK(a.embed_text("alpha") != c.embed_text("alpha"));
}

TEST_CASE("embeddings are unit-norm over random strings") {
    TestEmbedder embedder;
    std::mt19937 rng(123);
    for (int i = 0; i < 100; ++i) {
        std::string text;
        int words = 1 + static_cast<int>(rng() % 6);
        for (int w = 0; w < words; ++w)
            text += "tok" + std::to_string(rng() % 50) + " ";
        auto v = embedder.embed_text(text);
        CHECK(std::abs(l2_norm(v) - 1.0) < 1e-6);
    }
}

TEST_CASE("identical token bags give identical vectors") {
    TestEmbedder embedder;
    CHECK(embedder.embed_text("alpha beta gamma") == embedder.embed_text("Gamma, ALPHA beta!"));
    CHECK(embedder.embed_text("x") == embedder.embed_image("x"));
}

TEST_CASE("empty text is rejected") {
    TestEmbedder embedder;
    CHECK_THROWS_AS(embedder.embed_text(""), InputError);
}

TEST_CASE("cosine basics") {
    EmbeddingVector e1{1.0, 0.0};
    EmbeddingVector e2{0.0, 1.0};
    EmbeddingVector neg{-1.0, 0.0};
    CHECK(cosine(e1, e1) == doctest::Approx(1.0));
    CHECK(cosine(e1, e2) == doctest::Approx(0.0));
    CHECK(cosine(e1, neg) == doctest::Approx(-1.0));
    CHECK(cosine(e1, e2) == cosine(e2, e1));
    CHECK_THROWS_AS(cosine(e1, EmbeddingVector{1.0, 0.0, 0.0}), InputError);
}

TEST_CASE("top_k_similar ranks, truncates and breaks ties by id") {
    EmbeddingVector q{1.0, 0.0};
    std::vector<std::pair<std::string, EmbeddingVector>> candidates{
        {"b", {1.0, 0.0}},
        {"a", {1.0, 0.0}},
        {"c", {0.0, 1.0}},
    };
    auto top = top_k_similar(q, candidates, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].first == "a");
    CHECK(top[1].first == "b");

    CHECK(top_k_similar(q, candidates, 10).size() == 3);
    CHECK_THROWS_AS(top_k_similar(q, candidates, 0), InputError);
}

TEST_CASE("top_k_similar equals the full-sort oracle") {
    TestEmbedder embedder;
    EmbeddingVector q = embedder.embed_text("query words here");
    std::vector<std::pair<std::string, EmbeddingVector>> candidates;
    for (int i = 0; i < 20; ++i) {
        std::string id = "cand" + std::to_string(i);
        candidates.emplace_back(id, embedder.embed_text("item " + std::to_string(i * 13 % 7)));
    }
    auto got = top_k_similar(q, candidates, 5);

    std::vector<std::pair<std::string, double>> oracle;
    for (const auto& [id, v] : candidates)
        oracle.emplace_back(id, cosine(q, v));
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    oracle.resize(5);
    REQUIRE(got.size() == oracle.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].first == oracle[i].first);
        CHECK(got[i].second == doctest::Approx(oracle[i].second));
    }
}

TEST_CASE("embedding store put/get and dim discipline") {
    EmbeddingStore store;
    CHECK(store.dim() == -1);
    store.put("node", "a", {3.0, 4.0});
    CHECK(store.dim() == 2);
    CHECK(store.contains("node", "a"));
    CHECK_FALSE(store.contains("image", "a"));
    CHECK(store.get("node", "a")[0] == doctest::Approx(0.6)); // normalized on ingest
    CHECK_THROWS_AS(store.get("node", "missing"), InputError);
    CHECK_THROWS_AS(store.put("node", "b", {1.0, 0.0, 0.0}), InputError);
    CHECK_THROWS_AS(store.put("node", "z", {0.0, 0.0}), InputError);
}

TEST_CASE("embedding store round-trips through JSONL") {
    EmbeddingStore store;
    TestEmbedder embedder;
    store.put("node", "alice", embedder.embed_text("Alice"));
    store.put("image", "img1", embedder.embed_image("img/one.png"));
    store.put("chunk", "d#c0", embedder.embed_text("some chunk"));

    std::string path = "/tmp/mmgraph_test_store.jsonl";
    store.save(path);
    EmbeddingStore loaded = EmbeddingStore::load(path);
    std::remove(path.c_str());

    CHECK(loaded.size() == 3);
    CHECK(loaded.dim() == store.dim());
    CHECK(loaded.get("node", "alice") == store.get("node", "alice"));
    CHECK(loaded.keys() == store.keys());
    CHECK_THROWS_AS(EmbeddingStore::load("/nonexistent/store.jsonl"), InputError);
}

TEST_CASE("lookup_or_embed prefers the store") {
    EmbeddingStore store;
    TestEmbedder embedder;
    EmbeddingVector canned(64, 0.0);
    canned[0] = 1.0;
    store.put("query-entity", "acme", canned);
    CHECK(lookup_or_embed(store, embedder, "query-entity", "acme", "text", "acme") == canned);
    CHECK(lookup_or_embed(store, embedder, "query-entity", "other", "text", "other") ==
          embedder.embed_text("other"));
}

TEST_CASE("cache-only embedder refuses to compute") {
    CacheOnlyEmbedder embedder("store.jsonl");
    CHECK_THROWS_AS(embedder.embed_text("anything"), ProviderError);
}
