#include "mmgraph/retrieval.hpp"

#include "mmgraph/errors.hpp"
#include "mmgraph/text.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace mmgraph {

namespace {

nlohmann::ordered_json score_json(double value) {
    return nlohmann::ordered_json::parse(format_score(value));
}

double relevance_of(const EmbeddingVector& v, const std::vector<EmbeddingVector>& query_vectors) {
    double best = 0.0;
    for (const auto& q : query_vectors)
        best = std::max(best, cosine(v, q));
    return best;
}

std::string triplet_key(const Triplet& t) {
    return normalize_text(t.subject) + "\x1f" + normalize_text(t.relation) + "\x1f" +
           normalize_text(t.object);
}

Triplet triplet_from_edge(const MMGraph& graph, const std::string& edge_id) {
    const RelationEdge* e = graph.find_edge(edge_id);
    if (!e)
        throw InputError("unknown edge in solution: " + edge_id);
    const EntityNode* s = graph.find_node(e->src);
    const EntityNode* o = graph.find_node(e->dst);
    if (!s || !o)
        throw InputError("edge endpoints missing from graph: " + edge_id);
    return {s->surface, e->relation, o->surface, e->doc_id, e->span_id, e->source_text};
}

std::string text_provenance(const std::string& image_id, const std::string& kind,
                            const std::string& node_id) {
    return image_id + ":" + kind + ":" + node_id;
}

} // namespace

int RetrievedContext::word_count() const {
    std::size_t total = 0;
    for (const auto& t : triplets)
        total += mmgraph::word_count(t.subject) + mmgraph::word_count(t.relation) +
                 mmgraph::word_count(t.object);
    for (const auto& lt : linked_texts)
        total += mmgraph::word_count(lt.text);
    return static_cast<int>(total);
}

nlohmann::ordered_json context_to_json(const RetrievedContext& context) {
    nlohmann::ordered_json j;
    j["triplets"] = nlohmann::ordered_json::array();
    for (const auto& t : context.triplets)
        j["triplets"].push_back({{"subject", t.subject},
                                 {"relation", t.relation},
                                 {"object", t.object},
                                 {"doc_id", t.doc_id},
                                 {"span_id", t.span_id},
                                 {"source_text", t.source_text}});
    j["images"] = nlohmann::ordered_json::array();
    for (const auto& hit : context.images)
        j["images"].push_back({{"image_id", hit.image_id}, {"reason", hit.reason}});
    j["linked_texts"] = nlohmann::ordered_json::array();
    for (const auto& lt : context.linked_texts)
        j["linked_texts"].push_back({{"text", lt.text}, {"provenance", lt.provenance}});
    j["word_count"] = context.word_count();
    j["image_count"] = context.images.size();
    return j;
}

std::string trace_to_jsonl(const std::vector<TraceEvent>& trace) {
    std::string out;
    for (const auto& event : trace) {
        out += event.dump();
        out += "\n";
    }
    return out;
}

std::vector<TraceEvent> trace_from_jsonl(const std::string& text) {
    std::vector<TraceEvent> trace;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        try {
            trace.push_back(nlohmann::ordered_json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("bad trace line: ") + e.what());
        }
    }
    return trace;
}

QueryVectors query_entity_vectors(const std::string& query, ExtractionProvider& extractor,
                                  EmbeddingProvider& embedder, const EmbeddingStore& store) {
    if (query.empty())
        throw InputError("empty query");
    QueryVectors out;
    out.mentions = extract_query_entities(query, extractor);
    for (const auto& m : out.mentions)
        out.vectors.push_back(
            lookup_or_embed(store, embedder, "query-entity", m.normalized, "text", m.normalized));
    if (out.vectors.empty()) {
        out.fallback = true;
        out.vectors.push_back(
            lookup_or_embed(store, embedder, "query-entity", normalize_text(query), "text", query));
    }
    return out;
}

std::vector<std::vector<std::string>>
prune_components(const MMGraph& graph, const std::vector<EmbeddingVector>& query_vectors,
                 const EmbeddingStore& store, double threshold, std::vector<TraceEvent>* trace) {
    std::vector<std::vector<std::string>> kept;
    for (const auto& component : graph.components()) {
        double best = -2.0;
        std::string witness;
        for (const auto& node : component) {
            double rel = relevance_of(store.get("node", node), query_vectors);
            if (rel > best) {
                best = rel;
                witness = node;
            }
        }
        bool retained = best > threshold;
        if (trace) {
            TraceEvent event;
            event["event"] = retained ? "component_kept" : "component_dropped";
            event["component"] = graph.component_of.at(component.front());
            event["score"] = score_json(best);
            event["witness_node"] = witness;
            trace->push_back(std::move(event));
        }
        if (retained)
            kept.push_back(component);
    }
    return kept;
}

SubgraphResult retrieve_subgraph(const MMGraph& graph,
                                 const std::vector<EmbeddingVector>& query_vectors,
                                 const EmbeddingStore& store, const RetrievalConfig& config,
                                 std::vector<TraceEvent>* trace) {
    SubgraphResult result;
    auto kept = prune_components(graph, query_vectors, store, config.prune_threshold, trace);
    std::set<std::string> node_union;
    std::set<std::string> seen_triplets;
    for (const auto& component : kept) {
        PrizedGraph prized = assign_prizes(graph, component, query_vectors, store, config.pcst);
        PCSTSolution solution = solve_pcst(prized, config.pcst);
        if (trace) {
            TraceEvent event;
            event["event"] = "pcst_solution";
            event["component"] = graph.component_of.at(component.front());
            event["nodes"] = solution.nodes;
            event["edges"] = solution.edges;
            event["objective"] = score_json(solution.objective);
            trace->push_back(std::move(event));
        }
        node_union.insert(solution.nodes.begin(), solution.nodes.end());
        for (const auto& edge_id : solution.edges) {
            Triplet t = triplet_from_edge(graph, edge_id);
            if (seen_triplets.insert(triplet_key(t)).second)
                result.triplets.push_back(std::move(t));
        }
        result.solutions.push_back(std::move(solution));
    }
    result.nodes.assign(node_union.begin(), node_union.end());
    return result;
}

std::vector<ImageHit> text_to_image(const MMGraph& graph,
                                    const std::vector<std::string>& retrieved_nodes,
                                    const std::vector<EmbeddingVector>& query_vectors,
                                    const EmbeddingStore& store, const std::set<LinkKind>& kinds,
                                    std::vector<TraceEvent>* trace) {
    if (retrieved_nodes.empty())
        return {};
    std::set<std::string> retrieved(retrieved_nodes.begin(), retrieved_nodes.end());
    std::map<std::string, double> relevance;
    for (const auto& node : retrieved)
        relevance[node] = relevance_of(store.get("node", node), query_vectors);

    std::string best_image;
    const LinkEdge* best_witness = nullptr;
    double best_score = -2.0;
    for (const auto& image : graph.images) {
        const LinkEdge* witness = nullptr;
        double score = -2.0;
        // Links are (entity, kind)-sorted, so strict improvement keeps the
        // smallest witness id and its smallest link kind.
        for (const LinkEdge* link : graph.links_of_image(image.image_id, kinds)) {
            auto it = relevance.find(link->entity_id);
            if (it == relevance.end())
                continue;
            if (it->second > score) {
                score = it->second;
                witness = link;
            }
        }
        if (witness && score > best_score) {
            best_score = score;
            best_image = image.image_id;
            best_witness = witness;
        }
    }
    if (!best_witness)
        return {};
    if (trace) {
        TraceEvent event;
        event["event"] = "text_to_image";
        event["image"] = best_image;
        event["witness_node"] = best_witness->entity_id;
        event["kind"] = to_string(best_witness->kind);
        event["score"] = score_json(best_score);
        trace->push_back(std::move(event));
    }
    return {{best_image, "text_to_image"}};
}

ImageToTextResult image_to_text(const MMGraph& graph, const EmbeddingVector& query_vector,
                                const EmbeddingStore& store, int image_top_k,
                                const std::set<LinkKind>& kinds,
                                std::vector<TraceEvent>* trace) {
    ImageToTextResult out;
    if (image_top_k < 1 || graph.images.empty())
        return out;
    std::vector<std::pair<std::string, EmbeddingVector>> candidates;
    for (const auto& image : graph.images)
        candidates.emplace_back(image.image_id, store.get("image", image.image_id));
    std::set<std::string> seen_texts;
    for (const auto& [image_id, score] : top_k_similar(query_vector, candidates, image_top_k)) {
        if (trace) {
            TraceEvent event;
            event["event"] = "image_to_text_image";
            event["image"] = image_id;
            event["score"] = score_json(score);
            trace->push_back(std::move(event));
        }
        out.images.push_back({image_id, "similarity"});
        std::set<std::string> seen_nodes;
        for (const LinkEdge* link : graph.links_of_image(image_id, kinds)) {
            if (!seen_nodes.insert(link->entity_id).second)
                continue;
            std::string kind = to_string(link->kind);
            if (trace) {
                TraceEvent event;
                event["event"] = "image_to_text_text";
                event["image"] = image_id;
                event["node"] = link->entity_id;
                event["kind"] = kind;
                trace->push_back(std::move(event));
            }
            for (const auto& text : node_texts(graph, link->entity_id))
                if (seen_texts.insert(text).second)
                    out.texts.push_back({text, text_provenance(image_id, kind, link->entity_id)});
        }
    }
    return out;
}

RetrievedContext retrieve(const MMGraph& graph, const std::string& query,
                          ExtractionProvider& extractor, EmbeddingProvider& embedder,
                          const EmbeddingStore& store, const RetrievalConfig& config) {
    if (query.empty())
        throw InputError("empty query");
    RetrievedContext ctx;
    if (graph.nodes.empty() && graph.images.empty())
        return ctx;

    auto mentions = extract_query_entities(query, extractor);
    std::vector<EmbeddingVector> query_vectors;
    for (const auto& m : mentions) {
        TraceEvent event;
        event["event"] = "query_entity";
        event["surface"] = m.surface;
        event["normalized"] = m.normalized;
        ctx.trace.push_back(std::move(event));
        query_vectors.push_back(
            lookup_or_embed(store, embedder, "query-entity", m.normalized, "text", m.normalized));
    }
    EmbeddingVector whole_query =
        lookup_or_embed(store, embedder, "query-entity", normalize_text(query), "text", query);
    if (query_vectors.empty()) {
        TraceEvent event;
        event["event"] = "query_fallback";
        event["query"] = query;
        ctx.trace.push_back(std::move(event));
        query_vectors.push_back(whole_query);
    }

    SubgraphResult sub = retrieve_subgraph(graph, query_vectors, store, config, &ctx.trace);
    ctx.triplets = std::move(sub.triplets);

    // No link kinds means text-only retrieval: both cross-modal hops are off.
    if (config.link_kinds.empty())
        return ctx;

    auto t2i =
        text_to_image(graph, sub.nodes, query_vectors, store, config.link_kinds, &ctx.trace);
    auto i2t =
        image_to_text(graph, whole_query, store, config.image_top_k, config.link_kinds, &ctx.trace);

    std::set<std::string> seen_images;
    for (const auto& hit : t2i)
        if (seen_images.insert(hit.image_id).second)
            ctx.images.push_back(hit);
    for (const auto& hit : i2t.images)
        if (seen_images.insert(hit.image_id).second)
            ctx.images.push_back(hit);
    ctx.linked_texts = std::move(i2t.texts);
    return ctx;
}

RetrievedContext baseline_retrieve(const std::vector<TextChunk>& chunks,
                                   const std::vector<ImageNode>& images, const std::string& query,
                                   EmbeddingProvider& embedder, const EmbeddingStore& store,
                                   const RetrievalConfig& config) {
    if (query.empty())
        throw InputError("empty query");
    RetrievedContext ctx;
    EmbeddingVector q =
        lookup_or_embed(store, embedder, "query-entity", normalize_text(query), "text", query);

    if (config.baseline_chunk_top_k >= 1 && !chunks.empty()) {
        std::map<std::string, const TextChunk*> by_id;
        std::vector<std::pair<std::string, EmbeddingVector>> candidates;
        for (const auto& chunk : chunks) {
            by_id[chunk.chunk_id] = &chunk;
            candidates.emplace_back(
                chunk.chunk_id,
                lookup_or_embed(store, embedder, "chunk", chunk.chunk_id, "text", chunk.text));
        }
        for (const auto& [chunk_id, score] :
             top_k_similar(q, candidates, config.baseline_chunk_top_k)) {
            TraceEvent event;
            event["event"] = "baseline_chunk";
            event["chunk"] = chunk_id;
            event["score"] = score_json(score);
            ctx.trace.push_back(std::move(event));
            ctx.linked_texts.push_back({by_id.at(chunk_id)->text, chunk_id});
        }
    }

    if (config.baseline_image_top_k >= 1 && !images.empty()) {
        std::vector<std::pair<std::string, EmbeddingVector>> candidates;
        for (const auto& image : images)
            candidates.emplace_back(image.image_id,
                                    lookup_or_embed(store, embedder, "image", image.image_id,
                                                    "image", image_embed_payload(image)));
        for (const auto& [image_id, score] :
             top_k_similar(q, candidates, config.baseline_image_top_k)) {
            TraceEvent event;
            event["event"] = "baseline_image";
            event["image"] = image_id;
            event["score"] = score_json(score);
            ctx.trace.push_back(std::move(event));
            ctx.images.push_back({image_id, "similarity"});
        }
    }
    return ctx;
}

RetrievedContext replay_trace(const MMGraph& graph, const std::vector<TraceEvent>& trace) {
    RetrievedContext ctx;
    std::set<std::string> seen_triplets;
    std::set<std::string> seen_images;
    std::set<std::string> seen_texts;
    for (const auto& event : trace) {
        const std::string name = event.value("event", "");
        if (name == "pcst_solution") {
            for (const auto& edge_id : event.at("edges")) {
                Triplet t = triplet_from_edge(graph, edge_id.get<std::string>());
                if (seen_triplets.insert(triplet_key(t)).second)
                    ctx.triplets.push_back(std::move(t));
            }
        } else if (name == "text_to_image") {
            const std::string image_id = event.at("image").get<std::string>();
            if (seen_images.insert(image_id).second)
                ctx.images.push_back({image_id, "text_to_image"});
        } else if (name == "image_to_text_image") {
            const std::string image_id = event.at("image").get<std::string>();
            if (seen_images.insert(image_id).second)
                ctx.images.push_back({image_id, "similarity"});
        } else if (name == "image_to_text_text") {
            const std::string image_id = event.at("image").get<std::string>();
            const std::string node_id = event.at("node").get<std::string>();
            const std::string kind = event.at("kind").get<std::string>();
            for (const auto& text : node_texts(graph, node_id))
                if (seen_texts.insert(text).second)
                    ctx.linked_texts.push_back({text, text_provenance(image_id, kind, node_id)});
        }
    }
    ctx.trace = trace;
    return ctx;
}

std::vector<std::string> node_texts(const MMGraph& graph, const std::string& node_id) {
    const EntityNode* node = graph.find_node(node_id);
    if (!node)
        throw InputError("unknown node: " + node_id);
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const RelationEdge* e : graph.edges_of_node(node_id))
        if (!e->source_text.empty() && seen.insert(e->source_text).second)
            out.push_back(e->source_text);
    if (out.empty())
        out.push_back(node->surface);
    return out;
}

} // namespace mmgraph
