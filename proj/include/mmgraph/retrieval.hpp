#pragma once

#include "mmgraph/embedding.hpp"
#include "mmgraph/extraction.hpp"
#include "mmgraph/graph.hpp"
#include "mmgraph/pcst.hpp"

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

namespace mmgraph {

struct RetrievalConfig {
    double prune_threshold = 0.75;
    PCSTConfig pcst;
    int image_top_k = 1;
    // Link kinds consulted at query time (the graph may carry more).
    std::set<LinkKind> link_kinds = {LinkKind::Caption, LinkKind::Similarity,
                                     LinkKind::LayoutSection};
    int baseline_chunk_top_k = 2;
    int baseline_image_top_k = 2;
};

struct ImageHit {
    std::string image_id;
    std::string reason; // "text_to_image" | "similarity"
};

struct LinkedText {
    std::string text;
    std::string provenance; // "<image_id>:<kind>:<node_id>" or a chunk id
};

using TraceEvent = nlohmann::ordered_json;

struct RetrievedContext {
    std::vector<Triplet> triplets;
    std::vector<ImageHit> images;
    std::vector<LinkedText> linked_texts;
    std::vector<TraceEvent> trace;

    // Whitespace words across verbalized triplets and linked texts; the
    // "retrieved words" metric.
    int word_count() const;
};

nlohmann::ordered_json context_to_json(const RetrievedContext& context);
std::string trace_to_jsonl(const std::vector<TraceEvent>& trace);
std::vector<TraceEvent> trace_from_jsonl(const std::string& text);

// Query entity vectors with the whole-query fallback. Mentions embed under
// their normalized form; with no mentions the query itself becomes a single
// pseudo-entity.
struct QueryVectors {
    std::vector<EntityMention> mentions;
    bool fallback = false;
    std::vector<EmbeddingVector> vectors;
};
QueryVectors query_entity_vectors(const std::string& query, ExtractionProvider& extractor,
                                  EmbeddingProvider& embedder, const EmbeddingStore& store);

// Components whose best node-query cosine exceeds the threshold (strict >),
// in stable component order.
std::vector<std::vector<std::string>>
prune_components(const MMGraph& graph, const std::vector<EmbeddingVector>& query_vectors,
                 const EmbeddingStore& store, double threshold,
                 std::vector<TraceEvent>* trace = nullptr);

struct SubgraphResult {
    std::vector<PCSTSolution> solutions; // one per retained component
    std::vector<std::string> nodes;      // union, sorted
    std::vector<Triplet> triplets;       // solution edges, deduplicated
};
SubgraphResult retrieve_subgraph(const MMGraph& graph,
                                 const std::vector<EmbeddingVector>& query_vectors,
                                 const EmbeddingStore& store, const RetrievalConfig& config,
                                 std::vector<TraceEvent>* trace = nullptr);

// The argmax image over candidates linked to retrieved nodes; the witnessing
// node is the linked node most similar to the query.
std::vector<ImageHit> text_to_image(const MMGraph& graph,
                                    const std::vector<std::string>& retrieved_nodes,
                                    const std::vector<EmbeddingVector>& query_vectors,
                                    const EmbeddingStore& store, const std::set<LinkKind>& kinds,
                                    std::vector<TraceEvent>* trace = nullptr);

struct ImageToTextResult {
    std::vector<ImageHit> images;
    std::vector<LinkedText> texts;
};
// Top image_top_k images by whole-query similarity, then every linked node's
// texts.
ImageToTextResult image_to_text(const MMGraph& graph, const EmbeddingVector& query_vector,
                                const EmbeddingStore& store, int image_top_k,
                                const std::set<LinkKind>& kinds,
                                std::vector<TraceEvent>* trace = nullptr);

// Full pipeline: entities -> pruning -> PCST -> both link hops, merged and
// deduplicated, trace complete. An empty link-kind set disables both hops
// (text-only retrieval).
RetrievedContext retrieve(const MMGraph& graph, const std::string& query,
                          ExtractionProvider& extractor, EmbeddingProvider& embedder,
                          const EmbeddingStore& store, const RetrievalConfig& config);

// Similarity-only baseline over chunks and images; links never consulted.
RetrievedContext baseline_retrieve(const std::vector<TextChunk>& chunks,
                                   const std::vector<ImageNode>& images, const std::string& query,
                                   EmbeddingProvider& embedder, const EmbeddingStore& store,
                                   const RetrievalConfig& config);

// Rebuilds a context from its trace and the graph alone; retrieval output
// must equal its own replay.
RetrievedContext replay_trace(const MMGraph& graph, const std::vector<TraceEvent>& trace);

// Texts carried by a node: source texts of incident relation edges in edge-id
// order, else the node surface.
std::vector<std::string> node_texts(const MMGraph& graph, const std::string& node_id);

} // namespace mmgraph
