#include <doctest.h>

#include "mmgraph/errors.hpp"
#include "mmgraph/extraction.hpp"
#include "mmgraph/text.hpp"

#include <cstdio>
#include <fstream>

using namespace mmgraph;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents)
        : path("/tmp/mmgraph_test_" + name) {
        std::ofstream out(path, std::ios::binary);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("fallback extractor pulls subject/relation/object per sentence") {
    FallbackExtractor ex;
    std::string text = "Irene Dalton starred in Her Temporary Husband.";
    auto triplets = extract_triplets(text, ex, "d1", "s1");
    REQUIRE(triplets.size() == 1);
    CHECK(triplets[0].subject == "Irene Dalton");
    CHECK(triplets[0].relation == "starred in");
    CHECK(triplets[0].object == "Her Temporary Husband");
    CHECK(triplets[0].doc_id == "d1");
    CHECK(triplets[0].span_id == "s1:0-46");
    CHECK(triplets[0].source_text == text);
}

TEST_CASE("fallback extractor needs two entities and a relation") {
    FallbackExtractor ex;
    CHECK(ex.triplets("Just Paris.").empty());
    CHECK(ex.triplets("nothing capitalized here.").empty());
    CHECK(ex.triplets("Paris Lyon.").empty()); // adjacent entities merge into one run
}

TEST_CASE("extract_triplets dedupes and validates") {
    FallbackExtractor ex;
    auto triplets = extract_triplets("Alice met Bob. Alice met Bob.", ex, "d", "s");
    CHECK(triplets.size() == 1);
    CHECK_THROWS_AS(extract_triplets("", ex), InputError);
}

TEST_CASE("query entity extraction finds all-caps codenames") {
    FallbackExtractor ex;
    auto mentions = extract_query_entities("Does the codename ACME have a logo on the top?", ex);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].surface == "ACME");
    CHECK(mentions[0].normalized == "acme");

    CHECK(extract_query_entities("what color is the sky?", ex).empty());
    CHECK_THROWS_AS(extract_query_entities("", ex), InputError);
}

TEST_CASE("duplicate mentions collapse") {
    FallbackExtractor ex;
    auto mentions = extract_query_entities("Was Paris before Paris?", ex);
    CHECK(mentions.size() == 1);
}

TEST_CASE("caption entities") {
    FallbackExtractor ex;
    auto mentions = extract_caption_entities("Frankowski in 2010", ex);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].normalized == "frankowski");
    CHECK(extract_caption_entities("", ex).empty());
}

TEST_CASE("normalization is idempotent on mentions") {
    FallbackExtractor ex;
    for (const auto& m : extract_query_entities("Did Jean-Luc Picard meet Q?", ex))
        CHECK(normalize_text(m.normalized) == m.normalized);
}

TEST_CASE("fixture provider replays sidecar entries") {
    std::string text = "Some page text.";
    std::string sidecar =
        std::string(R"({"task":"triplets","hash":")") + content_hash(text) +
        R"(","triplets":[["A","likes","B"]]})" + "\n" +
        R"({"task":"entities","text":"a query","entities":["Foo","Bar"]})" + "\n";
    TempFile file("sidecar.jsonl", sidecar);

    FixtureExtractionProvider provider(file.path);
    CHECK(provider.capabilities().triplets);
    CHECK(provider.capabilities().entities);

    auto triplets = extract_triplets(text, provider, "d", "s");
    REQUIRE(triplets.size() == 1);
    CHECK(triplets[0].subject == "A");
    CHECK(triplets[0].source_text == text);

    auto mentions = extract_query_entities("a query", provider);
    REQUIRE(mentions.size() == 2);
    CHECK(mentions[0].normalized == "foo");

    CHECK_THROWS_AS(provider.triplets("unknown text"), ProviderError);
    CHECK_THROWS_AS(FixtureExtractionProvider("/nonexistent/sidecar.jsonl"), InputError);
}

TEST_CASE("document extraction merges sections in order, independent of jobs") {
    Document doc;
    doc.doc_id = "d";
    doc.sections.push_back({"s1", "A", "Alice met Bob."});
    doc.sections.push_back({"s2", "B", "Carol met Dave. Alice met Bob."});
    doc.sections.push_back({"s3", "C", ""});
    doc.images.push_back({"i1", "u", std::nullopt, "s3", std::nullopt});

    FallbackExtractor ex;
    auto serial = extract_document_triplets(doc, ex, 1);
    auto parallel = extract_document_triplets(doc, ex, 4);
    REQUIRE(serial.size() == 2); // cross-section duplicate removed
    CHECK(serial[0].span_id.substr(0, 2) == "s1");
    CHECK(serial[1].subject == "Carol");
    REQUIRE(parallel.size() == serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].subject == parallel[i].subject);
        CHECK(serial[i].span_id == parallel[i].span_id);
    }
}
