#pragma once

#include "mmgraph/corpus.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace mmgraph {

struct Triplet {
    std::string subject;
    std::string relation;
    std::string object;
    std::string doc_id;
    std::string span_id;     // "<section_id>:<begin>-<end>" within doc_id
    std::string source_text; // the sentence(s) the triplet came from
};

struct EntityMention {
    std::string surface;
    std::string normalized;
};

// Provider-level triplet with offsets into the input text.
struct RawTriplet {
    std::string subject;
    std::string relation;
    std::string object;
    int begin = 0;
    int end = 0;
};

struct ProviderCaps {
    bool triplets = false;
    bool entities = false;
};

class ExtractionProvider {
public:
    virtual ~ExtractionProvider() = default;
    virtual std::string identity() const = 0;
    virtual ProviderCaps capabilities() const = 0;
    virtual std::vector<RawTriplet> triplets(const std::string& text) = 0;
    virtual std::vector<std::string> entities(const std::string& text) = 0;
};

// Pure rule-based extractor. Entities are maximal runs of capitalized or
// all-caps tokens (sentence-initial stop-words excluded); per sentence the
// first entity is the subject, the last is the object, and the tokens
// between them form the relation.
class FallbackExtractor : public ExtractionProvider {
public:
    std::string identity() const override { return "deterministic-fallback"; }
    ProviderCaps capabilities() const override { return {true, true}; }
    std::vector<RawTriplet> triplets(const std::string& text) override;
    std::vector<std::string> entities(const std::string& text) override;
};

// Replays pre-extracted results from a JSONL sidecar keyed by input hash:
//   {"task":"triplets","hash":"<hex>","triplets":[[s,r,o],...]}
//   {"task":"entities","text":"...","entities":["..."]}
// Either "hash" or "text" identifies the input.
class FixtureExtractionProvider : public ExtractionProvider {
public:
    explicit FixtureExtractionProvider(const std::string& sidecar_path);
    std::string identity() const override { return identity_; }
    ProviderCaps capabilities() const override { return caps_; }
    std::vector<RawTriplet> triplets(const std::string& text) override;
    std::vector<std::string> entities(const std::string& text) override;

private:
    std::string identity_;
    ProviderCaps caps_;
    std::map<std::string, std::vector<RawTriplet>> triplets_;
    std::map<std::string, std::vector<std::string>> entities_;
};

// HTTP provider: POST <base>/extract {"task":..., "text":...}
//   -> {"triplets":[[s,r,o],...]} or {"entities":[...]}
class RemoteExtractionProvider : public ExtractionProvider {
public:
    explicit RemoteExtractionProvider(const std::string& base_url, int timeout_seconds = 30);
    std::string identity() const override { return "remote:" + base_url_; }
    ProviderCaps capabilities() const override { return {true, true}; }
    std::vector<RawTriplet> triplets(const std::string& text) override;
    std::vector<std::string> entities(const std::string& text) override;

private:
    std::vector<std::vector<std::string>> post(const std::string& task, const std::string& text,
                                               const std::string& key);
    std::string base_url_;
    int timeout_seconds_;
};

std::vector<Triplet> extract_triplets(const std::string& text, ExtractionProvider& provider,
                                      const std::string& doc_id = "",
                                      const std::string& section_id = "");

std::vector<EntityMention> extract_query_entities(const std::string& query,
                                                  ExtractionProvider& provider);

std::vector<EntityMention> extract_caption_entities(const std::string& caption,
                                                    ExtractionProvider& provider);

// Runs extract_triplets over every non-empty section body; results merged in
// document order regardless of `jobs`.
std::vector<Triplet> extract_document_triplets(const Document& document,
                                               ExtractionProvider& provider, int jobs = 1);

} // namespace mmgraph
