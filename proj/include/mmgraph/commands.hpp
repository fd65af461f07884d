#pragma once

#include "mmgraph/embedding.hpp"
#include "mmgraph/extraction.hpp"
#include "mmgraph/generation.hpp"
#include "mmgraph/retrieval.hpp"
#include "mmgraph/run_config.hpp"

#include <json.hpp>

#include <memory>
#include <set>
#include <string>

namespace mmgraph {

// "test" | "test:<dim>" | "cache:<path>" | "remote" (needs provider_url).
std::unique_ptr<EmbeddingProvider> make_embedder(const Settings& settings);
// "fallback" | "fixture:<path>" | "remote" (needs provider_url).
std::unique_ptr<ExtractionProvider> make_extractor(const Settings& settings);
// "" -> nullptr; "echo" | "fixture:<path>" | "remote" (needs provider_url).
std::unique_ptr<LMMClient> make_lmm(const Settings& settings);

// "none" or "" -> empty set, otherwise parse_link_kinds.
std::set<LinkKind> link_kinds_from_label(const std::string& label);
RetrievalConfig retrieval_config(const Settings& settings);

// Each command writes its artifacts under settings.out and returns the report
// that the CLI prints. Reports embed the resolved config.
nlohmann::ordered_json cmd_build(const Settings& settings);
nlohmann::ordered_json cmd_query(const Settings& settings, const std::string& question);
nlohmann::ordered_json cmd_eval(const Settings& settings, const std::string& testset_path);
nlohmann::ordered_json cmd_nea(const Settings& settings, const std::string& testset_path,
                               int count);

} // namespace mmgraph
