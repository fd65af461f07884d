#include "mmgraph/graph.hpp"

#include "mmgraph/errors.hpp"
#include "mmgraph/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mmgraph {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(LinkKind kind) {
    switch (kind) {
    case LinkKind::Caption: return "ca";
    case LinkKind::Similarity: return "si";
    case LinkKind::LayoutPage: return "lp";
    case LinkKind::LayoutSection: return "ls";
    }
    throw InputError("invalid LinkKind");
}

LinkKind link_kind_from_string(const std::string& text) {
    if (text == "ca") return LinkKind::Caption;
    if (text == "si") return LinkKind::Similarity;
    if (text == "lp") return LinkKind::LayoutPage;
    if (text == "ls") return LinkKind::LayoutSection;
    throw InputError("unknown link kind: \"" + text + "\" (expected ca|si|lp|ls)");
}

std::set<LinkKind> parse_link_kinds(const std::string& csv) {
    std::set<LinkKind> out;
    std::string token;
    std::istringstream in(csv);
    while (std::getline(in, token, ',')) {
        std::string t = collapse_whitespace(token);
        if (t.empty())
            continue;
        out.insert(link_kind_from_string(t));
    }
    return out;
}

std::string link_kinds_to_string(const std::set<LinkKind>& kinds) {
    std::string out;
    for (LinkKind kind : {LinkKind::Caption, LinkKind::Similarity, LinkKind::LayoutPage,
                          LinkKind::LayoutSection}) {
        if (!kinds.count(kind))
            continue;
        if (!out.empty())
            out.push_back(',');
        out += to_string(kind);
    }
    return out;
}

std::set<LinkKind> all_link_kinds() {
    return {LinkKind::Caption, LinkKind::Similarity, LinkKind::LayoutPage,
            LinkKind::LayoutSection};
}

const EntityNode* MMGraph::find_node(const std::string& id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const EntityNode& n, const std::string& key) { return n.id < key; });
    if (it != nodes.end() && it->id == id)
        return &*it;
    return nullptr;
}

const RelationEdge* MMGraph::find_edge(const std::string& id) const {
    auto it = std::lower_bound(edges.begin(), edges.end(), id,
                               [](const RelationEdge& e, const std::string& key) { return e.id < key; });
    if (it != edges.end() && it->id == id)
        return &*it;
    return nullptr;
}

const ImageNode* MMGraph::find_image(const std::string& image_id) const {
    auto it = std::lower_bound(images.begin(), images.end(), image_id,
                               [](const ImageNode& n, const std::string& key) {
                                   return n.image_id < key;
                               });
    if (it != images.end() && it->image_id == image_id)
        return &*it;
    return nullptr;
}

std::vector<std::vector<std::string>> MMGraph::components() const {
    std::map<std::string, std::vector<std::string>> grouped;
    for (const auto& [node, comp] : component_of)
        grouped[comp].push_back(node);
    std::vector<std::vector<std::string>> out;
    out.reserve(grouped.size());
    for (auto& [comp, members] : grouped) {
        std::sort(members.begin(), members.end());
        out.push_back(std::move(members));
    }
    return out;
}

std::vector<const RelationEdge*> MMGraph::edges_of_node(const std::string& node_id) const {
    std::vector<const RelationEdge*> out;
    for (const auto& e : edges)
        if (e.src == node_id || e.dst == node_id)
            out.push_back(&e);
    return out;
}

std::vector<const LinkEdge*> MMGraph::links_of_image(const std::string& image_id,
                                                     const std::set<LinkKind>& kinds) const {
    std::vector<const LinkEdge*> out;
    for (const auto& l : links)
        if (l.image_id == image_id && kinds.count(l.kind))
            out.push_back(&l);
    return out;
}

std::vector<const LinkEdge*> MMGraph::links_of_node(const std::string& node_id,
                                                    const std::set<LinkKind>& kinds) const {
    std::vector<const LinkEdge*> out;
    for (const auto& l : links)
        if (l.entity_id == node_id && kinds.count(l.kind))
            out.push_back(&l);
    return out;
}

namespace {

struct UnionFind {
    std::map<std::string, std::string> parent;

    void add(const std::string& x) {
        parent.emplace(x, x);
    }
    std::string find(const std::string& x) {
        std::string root = x;
        while (parent.at(root) != root)
            root = parent.at(root);
        std::string cur = x;
        while (parent.at(cur) != root) {
            std::string next = parent.at(cur);
            parent[cur] = root;
            cur = next;
        }
        return root;
    }
    void unite(const std::string& a, const std::string& b) {
        std::string ra = find(a);
        std::string rb = find(b);
        if (ra == rb)
            return;
        // Smaller id becomes the root so roots are deterministic.
        if (rb < ra)
            std::swap(ra, rb);
        parent[rb] = ra;
    }
};

std::string component_label(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "g%04zu", index);
    return buf;
}

std::string edge_label(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "e%04zu", index);
    return buf;
}

bool link_less(const LinkEdge& a, const LinkEdge& b) {
    if (a.image_id != b.image_id)
        return a.image_id < b.image_id;
    if (a.entity_id != b.entity_id)
        return a.entity_id < b.entity_id;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
}

void insert_link(MMGraph& graph, LinkEdge link) {
    auto it = std::lower_bound(graph.links.begin(), graph.links.end(), link, link_less);
    if (it != graph.links.end() && it->image_id == link.image_id &&
        it->entity_id == link.entity_id && it->kind == link.kind)
        return;
    graph.links.insert(it, std::move(link));
}

void insert_node(MMGraph& graph, EntityNode node) {
    auto it = std::lower_bound(graph.nodes.begin(), graph.nodes.end(), node,
                               [](const EntityNode& a, const EntityNode& b) { return a.id < b.id; });
    if (it != graph.nodes.end() && it->id == node.id)
        return;
    graph.nodes.insert(it, std::move(node));
}

} // namespace

void recompute_components(MMGraph& graph) {
    UnionFind uf;
    for (const auto& n : graph.nodes)
        uf.add(n.id);
    for (const auto& e : graph.edges)
        uf.unite(e.src, e.dst);
    // Roots are the smallest member ids; walking sorted nodes meets each
    // component at its smallest member first.
    std::map<std::string, std::string> label_of_root;
    graph.component_of.clear();
    for (const auto& n : graph.nodes) {
        std::string root = uf.find(n.id);
        auto it = label_of_root.find(root);
        if (it == label_of_root.end())
            it = label_of_root.emplace(root, component_label(label_of_root.size())).first;
        graph.component_of[n.id] = it->second;
    }
}

std::vector<LinkEdge> link_caption(MMGraph& graph, const ImageNode& image,
                                   ExtractionProvider& provider) {
    if (!image.caption || image.caption->empty())
        return {};
    std::vector<LinkEdge> out;
    for (const auto& mention : extract_caption_entities(*image.caption, provider)) {
        if (!graph.find_node(mention.normalized))
            insert_node(graph, EntityNode{mention.normalized, mention.surface});
        LinkEdge link{image.image_id, mention.normalized, LinkKind::Caption, std::nullopt};
        out.push_back(link);
        insert_link(graph, std::move(link));
    }
    return out;
}

std::vector<LinkEdge> link_similarity(const MMGraph& graph, const ImageNode& image,
                                      const EmbeddingStore& store, int top_n) {
    if (top_n < 1)
        throw InputError("link_similarity: top_n must be >= 1");
    const EmbeddingVector& image_vec = store.get("image", image.image_id);
    std::vector<std::pair<std::string, EmbeddingVector>> candidates;
    candidates.reserve(graph.nodes.size());
    for (const auto& n : graph.nodes)
        candidates.emplace_back(n.id, store.get("node", n.id));
    std::vector<LinkEdge> out;
    for (const auto& [id, score] : top_k_similar(image_vec, candidates, top_n))
        out.push_back(LinkEdge{image.image_id, id, LinkKind::Similarity, score});
    return out;
}

std::vector<LinkEdge> link_layout(const MMGraph& graph, const Document& document,
                                  const ImageNode& image, LinkKind mode) {
    if (mode != LinkKind::LayoutPage && mode != LinkKind::LayoutSection)
        throw InputError("link_layout: mode must be lp or ls");
    std::map<std::string, int> page_of_span;
    if (mode == LinkKind::LayoutPage) {
        if (document.pages.empty())
            throw InputError("link_layout: page mode requires a paginated document");
        for (const auto& page : document.pages)
            for (const auto& span : page.member_span_ids)
                page_of_span[span] = page.page_index;
    }
    std::vector<LinkEdge> out;
    for (const auto& node : graph.nodes) {
        bool qualifies = false;
        for (const RelationEdge* e : graph.edges_of_node(node.id)) {
            if (e->doc_id != image.doc_id)
                continue;
            if (mode == LinkKind::LayoutSection) {
                if (SpanRef::parse(e->span_id).section_id == image.section_id) {
                    qualifies = true;
                    break;
                }
            } else {
                auto it = page_of_span.find(e->span_id);
                if (it != page_of_span.end() && image.page_index &&
                    it->second == *image.page_index) {
                    qualifies = true;
                    break;
                }
            }
        }
        if (qualifies)
            out.push_back(LinkEdge{image.image_id, node.id, mode, std::nullopt});
    }
    return out;
}

std::string image_embed_payload(const ImageNode& image) {
    if (image.caption && !image.caption->empty())
        return image.uri + " " + *image.caption;
    return image.uri;
}

MMGraph build_graph(const Corpus& corpus, const std::vector<Triplet>& triplets,
                    const GraphBuildConfig& config, ExtractionProvider& extractor,
                    EmbeddingProvider& embedder, EmbeddingStore& store) {
    if (config.si_top_n < 1)
        throw InputError("build_graph: si_top_n must be >= 1");
    MMGraph graph;
    graph.corpus_id = corpus.corpus_id;

    for (const auto& t : triplets)
        if (!t.doc_id.empty() && !corpus.find_document(t.doc_id))
            throw InputError("triplet references unknown document: " + t.doc_id);

    // Entity nodes keep the first-seen surface per normalized form.
    std::map<std::string, std::string> surface_of;
    for (const auto& t : triplets) {
        for (const std::string* s : {&t.subject, &t.object}) {
            std::string norm = normalize_text(*s);
            if (norm.empty())
                throw InputError("triplet entity normalizes to empty: \"" + *s + "\"");
            surface_of.emplace(norm, *s);
        }
    }
    for (const auto& [id, surface] : surface_of)
        graph.nodes.push_back(EntityNode{id, surface});

    struct EdgeDraft {
        std::string src, dst, relation, doc_id, span_id, source_text;
    };
    std::vector<EdgeDraft> drafts;
    drafts.reserve(triplets.size());
    for (const auto& t : triplets)
        drafts.push_back({normalize_text(t.subject), normalize_text(t.object), t.relation,
                          t.doc_id, t.span_id, t.source_text});
    std::sort(drafts.begin(), drafts.end(), [](const EdgeDraft& a, const EdgeDraft& b) {
        return std::tie(a.src, a.relation, a.dst, a.doc_id, a.span_id) <
               std::tie(b.src, b.relation, b.dst, b.doc_id, b.span_id);
    });
    drafts.erase(std::unique(drafts.begin(), drafts.end(),
                             [](const EdgeDraft& a, const EdgeDraft& b) {
                                 return std::tie(a.src, a.relation, a.dst, a.doc_id, a.span_id) ==
                                        std::tie(b.src, b.relation, b.dst, b.doc_id, b.span_id);
                             }),
                 drafts.end());
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        auto& d = drafts[i];
        graph.edges.push_back(RelationEdge{edge_label(i), d.src, d.dst, d.relation, d.doc_id,
                                           d.span_id, d.source_text});
    }

    // Paginated copies drive layout linking and image page assignment.
    std::map<std::string, Document> paginated;
    for (const auto& doc : corpus.documents) {
        std::vector<Triplet> own;
        for (const auto& t : triplets)
            if (t.doc_id == doc.doc_id)
                own.push_back(t);
        paginated.emplace(doc.doc_id, paginate(doc, config.triplets_per_page, own));
    }

    for (const auto& [doc_id, doc] : paginated)
        for (const auto& img : doc.images)
            graph.images.push_back(ImageNode{img.image_id, doc_id, img.uri, img.caption,
                                             img.section_id, img.page_index});
    std::sort(graph.images.begin(), graph.images.end(),
              [](const ImageNode& a, const ImageNode& b) { return a.image_id < b.image_id; });

    if (config.link_kinds.count(LinkKind::Caption))
        for (const auto& image : graph.images)
            link_caption(graph, image, extractor);

    recompute_components(graph);

    for (const auto& n : graph.nodes)
        store.put("node", n.id, embedder.embed_text(n.surface));
    for (const auto& e : graph.edges)
        store.put("edge", e.id, embedder.embed_text(e.relation));
    for (const auto& img : graph.images)
        store.put("image", img.image_id, embedder.embed_image(image_embed_payload(img)));
    store.set_provider_identity(embedder.identity());

    if (config.link_kinds.count(LinkKind::Similarity) && !graph.nodes.empty())
        for (const auto& image : graph.images)
            for (auto& link : link_similarity(graph, image, store, config.si_top_n))
                insert_link(graph, std::move(link));

    for (LinkKind mode : {LinkKind::LayoutPage, LinkKind::LayoutSection}) {
        if (!config.link_kinds.count(mode))
            continue;
        for (const auto& image : graph.images)
            for (auto& link : link_layout(graph, paginated.at(image.doc_id), image, mode))
                insert_link(graph, std::move(link));
    }

    return graph;
}

namespace {

json score_number(double score) {
    return json::parse(format_score(score));
}

} // namespace

ordered_json graph_to_json(const MMGraph& graph) {
    ordered_json j;
    j["corpus_id"] = graph.corpus_id;
    j["nodes"] = ordered_json::array();
    for (const auto& n : graph.nodes) {
        ordered_json row;
        row["id"] = n.id;
        row["surface"] = n.surface;
        j["nodes"].push_back(std::move(row));
    }
    j["edges"] = ordered_json::array();
    for (const auto& e : graph.edges) {
        ordered_json row;
        row["id"] = e.id;
        row["src"] = e.src;
        row["dst"] = e.dst;
        row["relation"] = e.relation;
        row["doc_id"] = e.doc_id;
        row["span_id"] = e.span_id;
        row["source_text"] = e.source_text;
        j["edges"].push_back(std::move(row));
    }
    j["images"] = ordered_json::array();
    for (const auto& img : graph.images) {
        ordered_json row;
        row["image_id"] = img.image_id;
        row["doc_id"] = img.doc_id;
        row["uri"] = img.uri;
        row["caption"] = img.caption ? ordered_json(*img.caption) : ordered_json(nullptr);
        row["section_id"] = img.section_id;
        row["page_index"] = img.page_index ? ordered_json(*img.page_index) : ordered_json(nullptr);
        j["images"].push_back(std::move(row));
    }
    j["links"] = ordered_json::array();
    for (const auto& l : graph.links) {
        ordered_json row;
        row["image_id"] = l.image_id;
        row["entity_id"] = l.entity_id;
        row["kind"] = to_string(l.kind);
        if (l.score)
            row["score"] = score_number(*l.score);
        j["links"].push_back(std::move(row));
    }
    j["components"] = ordered_json::object();
    for (const auto& [node, comp] : graph.component_of)
        j["components"][node] = comp;
    return j;
}

std::string graph_to_string(const MMGraph& graph) {
    return graph_to_json(graph).dump(2) + "\n";
}

void save_graph(const MMGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write graph file: " + path);
    out << graph_to_string(graph);
}

MMGraph graph_from_json(const json& j) {
    MMGraph graph;
    try {
        graph.corpus_id = j.value("corpus_id", "");
        for (const auto& row : j.at("nodes"))
            graph.nodes.push_back(EntityNode{row.at("id").get<std::string>(),
                                             row.at("surface").get<std::string>()});
        for (const auto& row : j.at("edges"))
            graph.edges.push_back(RelationEdge{
                row.at("id").get<std::string>(), row.at("src").get<std::string>(),
                row.at("dst").get<std::string>(), row.at("relation").get<std::string>(),
                row.value("doc_id", ""), row.value("span_id", ""), row.value("source_text", "")});
        for (const auto& row : j.at("images")) {
            ImageNode img;
            img.image_id = row.at("image_id").get<std::string>();
            img.doc_id = row.value("doc_id", "");
            img.uri = row.at("uri").get<std::string>();
            if (row.contains("caption") && !row["caption"].is_null())
                img.caption = row["caption"].get<std::string>();
            img.section_id = row.value("section_id", "");
            if (row.contains("page_index") && !row["page_index"].is_null())
                img.page_index = row["page_index"].get<int>();
            graph.images.push_back(std::move(img));
        }
        for (const auto& row : j.at("links")) {
            LinkEdge link;
            link.image_id = row.at("image_id").get<std::string>();
            link.entity_id = row.at("entity_id").get<std::string>();
            link.kind = link_kind_from_string(row.at("kind").get<std::string>());
            if (row.contains("score") && !row["score"].is_null())
                link.score = row["score"].get<double>();
            graph.links.push_back(std::move(link));
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("graph file schema violation: ") + e.what());
    }
    std::sort(graph.nodes.begin(), graph.nodes.end(),
              [](const EntityNode& a, const EntityNode& b) { return a.id < b.id; });
    std::sort(graph.edges.begin(), graph.edges.end(),
              [](const RelationEdge& a, const RelationEdge& b) { return a.id < b.id; });
    std::sort(graph.images.begin(), graph.images.end(),
              [](const ImageNode& a, const ImageNode& b) { return a.image_id < b.image_id; });
    std::sort(graph.links.begin(), graph.links.end(), link_less);

    for (const auto& e : graph.edges)
        if (!graph.find_node(e.src) || !graph.find_node(e.dst))
            throw InputError("graph file: edge " + e.id + " references a missing node");
    for (const auto& l : graph.links)
        if (!graph.find_image(l.image_id) || !graph.find_node(l.entity_id))
            throw InputError("graph file: link " + l.image_id + "->" + l.entity_id +
                             " references a missing endpoint");

    recompute_components(graph);
    if (j.contains("components")) {
        std::map<std::string, std::string> declared;
        for (const auto& [node, comp] : j["components"].items())
            declared[node] = comp.get<std::string>();
        if (declared != graph.component_of)
            throw InputError("graph file: component index does not match relation edges");
    }
    return graph;
}

MMGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open graph file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("graph file is not valid JSON: " + std::string(e.what()));
    }
    return graph_from_json(j);
}

} // namespace mmgraph
