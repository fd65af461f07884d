#pragma once

#include "mmgraph/corpus.hpp"
#include "mmgraph/embedding.hpp"
#include "mmgraph/extraction.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace mmgraph {

enum class LinkKind { Caption, Similarity, LayoutPage, LayoutSection };

std::string to_string(LinkKind kind);
LinkKind link_kind_from_string(const std::string& text);
// "ca,ls" -> {Caption, LayoutSection}; "" -> empty set.
std::set<LinkKind> parse_link_kinds(const std::string& csv);
std::string link_kinds_to_string(const std::set<LinkKind>& kinds);
std::set<LinkKind> all_link_kinds();

// Node id is the normalized surface; surface keeps the first-seen spelling.
struct EntityNode {
    std::string id;
    std::string surface;
};

struct RelationEdge {
    std::string id;
    std::string src;
    std::string dst;
    std::string relation;
    std::string doc_id;
    std::string span_id;
    std::string source_text;
};

struct ImageNode {
    std::string image_id;
    std::string doc_id;
    std::string uri;
    std::optional<std::string> caption;
    std::string section_id;
    std::optional<int> page_index;
};

struct LinkEdge {
    std::string image_id;
    std::string entity_id;
    LinkKind kind = LinkKind::Caption;
    std::optional<double> score;
};

struct GraphBuildConfig {
    std::set<LinkKind> link_kinds = all_link_kinds();
    int si_top_n = 3;
    int triplets_per_page = 20;
};

// Relation edges connect entities only; link edges connect image<->entity
// only; component index covers the entity/relation graph with links excluded.
// Embeddings live in the companion store under kinds node/edge/image keyed by
// the ids here.
struct MMGraph {
    std::string corpus_id;
    std::vector<EntityNode> nodes;   // sorted by id
    std::vector<RelationEdge> edges; // ids e0000... assigned after (src,relation,dst,...) sort
    std::vector<ImageNode> images;   // sorted by image_id
    std::vector<LinkEdge> links;     // sorted by (image_id, entity_id, kind)
    std::map<std::string, std::string> component_of; // entity id -> g0000...

    const EntityNode* find_node(const std::string& id) const;
    const RelationEdge* find_edge(const std::string& id) const;
    const ImageNode* find_image(const std::string& image_id) const;
    // Partition of entity node ids, ordered by smallest member id.
    std::vector<std::vector<std::string>> components() const;
    std::vector<const RelationEdge*> edges_of_node(const std::string& node_id) const;
    std::vector<const LinkEdge*> links_of_image(const std::string& image_id,
                                                const std::set<LinkKind>& kinds) const;
    std::vector<const LinkEdge*> links_of_node(const std::string& node_id,
                                               const std::set<LinkKind>& kinds) const;
};

// One CA link per caption entity; entities missing from the graph become new
// singleton nodes. Captionless images yield no links.
std::vector<LinkEdge> link_caption(MMGraph& graph, const ImageNode& image,
                                   ExtractionProvider& provider);

// SI links to the top_n entity nodes by cosine(image, node), scores recorded.
std::vector<LinkEdge> link_similarity(const MMGraph& graph, const ImageNode& image,
                                      const EmbeddingStore& store, int top_n);

// mode LayoutPage: links to entities with a provenance span on the image's
// page (document must be paginated). mode LayoutSection: same for section.
std::vector<LinkEdge> link_layout(const MMGraph& graph, const Document& document,
                                  const ImageNode& image, LinkKind mode);

// Full build: entity/relation graph from triplets, pagination, embeddings
// into `store` (kinds node/edge/image), then every enabled linker.
MMGraph build_graph(const Corpus& corpus, const std::vector<Triplet>& triplets,
                    const GraphBuildConfig& config, ExtractionProvider& extractor,
                    EmbeddingProvider& embedder, EmbeddingStore& store);

void recompute_components(MMGraph& graph);

nlohmann::ordered_json graph_to_json(const MMGraph& graph);
std::string graph_to_string(const MMGraph& graph);
void save_graph(const MMGraph& graph, const std::string& path);
MMGraph graph_from_json(const nlohmann::json& j);
MMGraph load_graph(const std::string& path);

// Embedding payload for an image: uri plus caption when present.
std::string image_embed_payload(const ImageNode& image);

} // namespace mmgraph
