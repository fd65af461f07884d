#include "mmgraph/pcst.hpp"

#include "mmgraph/errors.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <set>

namespace mmgraph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ranks entries by (relevance desc, id asc) and hands top-k prizes k - rank.
std::map<std::string, double> rank_prizes(std::vector<std::pair<std::string, double>> relevance,
                                          int k) {
    std::sort(relevance.begin(), relevance.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    std::map<std::string, double> prize;
    for (std::size_t rank = 0; rank < relevance.size(); ++rank)
        prize[relevance[rank].first] =
            rank < static_cast<std::size_t>(k) ? static_cast<double>(k) - rank : 0.0;
    return prize;
}

} // namespace

PrizedGraph assign_prizes(const MMGraph& graph, const std::vector<std::string>& component,
                          const std::vector<EmbeddingVector>& query_vectors,
                          const EmbeddingStore& store, const PCSTConfig& config) {
    if (component.empty())
        throw InputError("assign_prizes: component must be non-empty");
    if (query_vectors.empty())
        throw InputError("assign_prizes: need at least one query entity vector");
    if (config.k < 1)
        throw InputError("assign_prizes: k must be >= 1");

    auto relevance_of = [&](const EmbeddingVector& vec) {
        double best = -kInf;
        for (const auto& qv : query_vectors)
            best = std::max(best, cosine(vec, qv));
        return best;
    };

    std::set<std::string> members(component.begin(), component.end());
    std::vector<std::pair<std::string, double>> node_rel;
    for (const auto& id : members) {
        if (!graph.find_node(id))
            throw InputError("assign_prizes: unknown node " + id);
        node_rel.emplace_back(id, relevance_of(store.get("node", id)));
    }
    std::map<std::string, double> node_prize = rank_prizes(node_rel, config.k);

    std::vector<std::pair<std::string, double>> edge_rel;
    std::vector<const RelationEdge*> member_edges;
    for (const auto& e : graph.edges) {
        if (!members.count(e.src) || !members.count(e.dst))
            continue;
        member_edges.push_back(&e);
        edge_rel.emplace_back(e.id, relevance_of(store.get("edge", e.id)));
    }
    std::map<std::string, double> edge_prize = rank_prizes(edge_rel, config.k);

    PrizedGraph prized;
    for (auto& [id, rel] : node_rel)
        prized.nodes.push_back(PrizedNode{id, node_prize.at(id), rel});
    for (const RelationEdge* e : member_edges) {
        double prize = edge_prize.at(e->id);
        prized.edges.push_back(PrizedEdge{e->id, e->src, e->dst, config.edge_cost, prize,
                                          std::max(config.epsilon, config.edge_cost - prize)});
    }
    std::sort(prized.nodes.begin(), prized.nodes.end(),
              [](const PrizedNode& a, const PrizedNode& b) { return a.id < b.id; });
    std::sort(prized.edges.begin(), prized.edges.end(),
              [](const PrizedEdge& a, const PrizedEdge& b) { return a.id < b.id; });
    return prized;
}

namespace {

struct Indexed {
    std::vector<std::string> ids;             // sorted node ids
    std::map<std::string, int> index_of;
    std::vector<double> prize;
    // Edges as (u, v, cost, id, original index), self-loops dropped.
    struct E {
        int u, v;
        double cost;
        std::string id;
    };
    std::vector<E> edges;
    std::vector<std::vector<int>> incident; // node -> edge indices
};

Indexed index_graph(const PrizedGraph& prized) {
    Indexed g;
    for (const auto& n : prized.nodes)
        g.ids.push_back(n.id);
    std::sort(g.ids.begin(), g.ids.end());
    g.ids.erase(std::unique(g.ids.begin(), g.ids.end()), g.ids.end());
    if (g.ids.size() != prized.nodes.size())
        throw InputError("solve_pcst: duplicate node ids");
    for (std::size_t i = 0; i < g.ids.size(); ++i)
        g.index_of[g.ids[i]] = static_cast<int>(i);
    g.prize.assign(g.ids.size(), 0.0);
    for (const auto& n : prized.nodes)
        g.prize[static_cast<std::size_t>(g.index_of.at(n.id))] = n.prize;
    g.incident.assign(g.ids.size(), {});
    for (const auto& e : prized.edges) {
        auto su = g.index_of.find(e.src);
        auto sv = g.index_of.find(e.dst);
        if (su == g.index_of.end() || sv == g.index_of.end())
            throw InputError("solve_pcst: edge " + e.id + " references a missing node");
        if (su->second == sv->second)
            continue; // self-loop never joins a tree
        Indexed::E edge{su->second, sv->second, e.effective_cost, e.id};
        g.incident[static_cast<std::size_t>(edge.u)].push_back(static_cast<int>(g.edges.size()));
        g.incident[static_cast<std::size_t>(edge.v)].push_back(static_cast<int>(g.edges.size()));
        g.edges.push_back(std::move(edge));
    }
    return g;
}

// Minimum spanning tree of the subgraph induced by `mask`; the caller
// guarantees connectivity. Deterministic: each step attaches the cheapest
// (cost, edge id) crossing edge.
std::pair<double, std::vector<std::string>> mst_over(const Indexed& g, unsigned mask) {
    int first = -1;
    int member_count = 0;
    for (std::size_t i = 0; i < g.ids.size(); ++i) {
        if (mask & (1u << i)) {
            ++member_count;
            if (first < 0)
                first = static_cast<int>(i);
        }
    }
    std::vector<std::string> edge_ids;
    if (member_count <= 1)
        return {0.0, edge_ids};
    unsigned in_tree = 1u << first;
    double total = 0.0;
    for (int step = 1; step < member_count; ++step) {
        int best_edge = -1;
        for (std::size_t ei = 0; ei < g.edges.size(); ++ei) {
            const auto& e = g.edges[ei];
            unsigned bu = 1u << e.u;
            unsigned bv = 1u << e.v;
            if (!(mask & bu) || !(mask & bv))
                continue;
            bool cu = (in_tree & bu) != 0;
            bool cv = (in_tree & bv) != 0;
            if (cu == cv)
                continue;
            if (best_edge < 0 || e.cost < g.edges[static_cast<std::size_t>(best_edge)].cost ||
                (e.cost == g.edges[static_cast<std::size_t>(best_edge)].cost &&
                 e.id < g.edges[static_cast<std::size_t>(best_edge)].id))
                best_edge = static_cast<int>(ei);
        }
        const auto& chosen = g.edges[static_cast<std::size_t>(best_edge)];
        in_tree |= (1u << chosen.u) | (1u << chosen.v);
        total += chosen.cost;
        edge_ids.push_back(chosen.id);
    }
    std::sort(edge_ids.begin(), edge_ids.end());
    return {total, edge_ids};
}

PCSTSolution finish_solution(const Indexed& g, unsigned mask, double objective,
                             std::vector<std::string> edge_ids) {
    PCSTSolution s;
    for (std::size_t i = 0; i < g.ids.size(); ++i)
        if (mask & (1u << i))
            s.nodes.push_back(g.ids[i]);
    s.edges = std::move(edge_ids);
    s.objective = objective;
    return s;
}

} // namespace

PCSTSolution solve_pcst_exact(const PrizedGraph& prized, const PCSTConfig& config) {
    if (prized.nodes.empty())
        throw InputError("solve_pcst_exact: empty graph");
    if (config.exact_node_limit < 1 ||
        prized.nodes.size() > static_cast<std::size_t>(config.exact_node_limit))
        throw InputError("solve_pcst_exact: node count exceeds exact_node_limit");
    if (prized.nodes.size() > 25)
        throw InputError("solve_pcst_exact: subset enumeration is capped at 25 nodes");
    Indexed g = index_graph(prized);
    std::size_t n = g.ids.size();

    std::vector<unsigned> adjacency(n, 0);
    for (const auto& e : g.edges) {
        adjacency[static_cast<std::size_t>(e.u)] |= 1u << e.v;
        adjacency[static_cast<std::size_t>(e.v)] |= 1u << e.u;
    }

    auto connected = [&](unsigned mask) {
        int first = -1;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) {
                first = static_cast<int>(i);
                break;
            }
        unsigned seen = 1u << first;
        unsigned frontier = seen;
        while (frontier) {
            unsigned next = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (frontier & (1u << i))
                    next |= adjacency[i];
            next &= mask & ~seen;
            seen |= next;
            frontier = next;
        }
        return seen == mask;
    };

    bool have_best = false;
    unsigned best_mask = 0;
    double best_objective = -kInf;
    std::vector<std::string> best_edges;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        if (!connected(mask))
            continue;
        double prize_sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) {
                prize_sum += g.prize[i];
                ++count;
            }
        auto [cost, edge_ids] = mst_over(g, mask);
        double objective = prize_sum - cost;
        bool better = false;
        if (!have_best || objective > best_objective) {
            better = true;
        } else if (objective == best_objective) {
            int best_count = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (best_mask & (1u << i))
                    ++best_count;
            if (count < best_count)
                better = true;
            else if (count == best_count) {
                // Lexicographic on sorted id vectors == numeric compare of the
                // lowest differing bit, but do it via the ids to stay literal.
                std::vector<std::string> a, b;
                for (std::size_t i = 0; i < n; ++i) {
                    if (mask & (1u << i))
                        a.push_back(g.ids[i]);
                    if (best_mask & (1u << i))
                        b.push_back(g.ids[i]);
                }
                better = a < b;
            }
        }
        if (better) {
            have_best = true;
            best_mask = mask;
            best_objective = objective;
            best_edges = std::move(edge_ids);
        }
    }
    return finish_solution(g, best_mask, best_objective, std::move(best_edges));
}

namespace {

PCSTSolution solve_heuristic(const PrizedGraph& prized, const PCSTConfig& config) {
    (void)config;
    Indexed g = index_graph(prized);
    std::size_t n = g.ids.size();

    int start = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (g.prize[i] > g.prize[static_cast<std::size_t>(start)])
            start = static_cast<int>(i);

    std::vector<bool> in_tree(n, false);
    std::set<int> tree_edges;
    in_tree[static_cast<std::size_t>(start)] = true;

    while (true) {
        // Multi-source Dijkstra from the tree over effective costs.
        std::vector<double> dist(n, kInf);
        std::vector<int> pred_edge(n, -1);
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
        for (std::size_t i = 0; i < n; ++i)
            if (in_tree[i]) {
                dist[i] = 0.0;
                heap.emplace(0.0, static_cast<int>(i));
            }
        while (!heap.empty()) {
            auto [d, u] = heap.top();
            heap.pop();
            if (d > dist[static_cast<std::size_t>(u)])
                continue;
            for (int ei : g.incident[static_cast<std::size_t>(u)]) {
                const auto& e = g.edges[static_cast<std::size_t>(ei)];
                int v = e.u == u ? e.v : e.u;
                double nd = d + e.cost;
                if (nd < dist[static_cast<std::size_t>(v)]) {
                    dist[static_cast<std::size_t>(v)] = nd;
                    pred_edge[static_cast<std::size_t>(v)] = ei;
                    heap.emplace(nd, v);
                }
            }
        }

        int best_target = -1;
        double best_gain = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v] || g.prize[v] <= 0.0 || dist[v] == kInf)
                continue;
            // Prizes of every new node along the path count toward the gain.
            double gain = -dist[v];
            int cur = static_cast<int>(v);
            while (!in_tree[static_cast<std::size_t>(cur)]) {
                gain += g.prize[static_cast<std::size_t>(cur)];
                const auto& e = g.edges[static_cast<std::size_t>(pred_edge[static_cast<std::size_t>(cur)])];
                cur = e.u == cur ? e.v : e.u;
            }
            if (gain > best_gain ||
                (gain == best_gain && best_target >= 0 &&
                 g.ids[v] < g.ids[static_cast<std::size_t>(best_target)]))
                best_target = static_cast<int>(v);
            if (gain > best_gain)
                best_gain = gain;
        }
        if (best_target < 0 || best_gain <= 0.0)
            break;
        int cur = best_target;
        while (!in_tree[static_cast<std::size_t>(cur)]) {
            in_tree[static_cast<std::size_t>(cur)] = true;
            int ei = pred_edge[static_cast<std::size_t>(cur)];
            tree_edges.insert(ei);
            const auto& e = g.edges[static_cast<std::size_t>(ei)];
            cur = e.u == cur ? e.v : e.u;
        }
    }

    // Prune leaves that do not pay for their edge; neutral leaves go too,
    // matching the fewer-nodes tie-break.
    bool pruned = true;
    while (pruned) {
        pruned = false;
        std::vector<int> degree(n, 0);
        int size = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (in_tree[i])
                ++size;
        if (size <= 1)
            break;
        for (int ei : tree_edges) {
            const auto& e = g.edges[static_cast<std::size_t>(ei)];
            ++degree[static_cast<std::size_t>(e.u)];
            ++degree[static_cast<std::size_t>(e.v)];
        }
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_tree[v] || degree[v] != 1)
                continue;
            // degree==1 means exactly one incident tree edge; find it.
            int incident_edge = -1;
            for (int ei : tree_edges) {
                const auto& e = g.edges[static_cast<std::size_t>(ei)];
                if (e.u == static_cast<int>(v) || e.v == static_cast<int>(v)) {
                    incident_edge = ei;
                    break;
                }
            }
            const auto& e = g.edges[static_cast<std::size_t>(incident_edge)];
            if (g.prize[v] - e.cost <= 0.0) {
                in_tree[v] = false;
                tree_edges.erase(incident_edge);
                pruned = true;
                break;
            }
        }
    }

    PCSTSolution s;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (in_tree[i]) {
            s.nodes.push_back(g.ids[i]);
            objective += g.prize[i];
        }
    for (int ei : tree_edges) {
        s.edges.push_back(g.edges[static_cast<std::size_t>(ei)].id);
        objective -= g.edges[static_cast<std::size_t>(ei)].cost;
    }
    std::sort(s.edges.begin(), s.edges.end());
    s.objective = objective;
    return s;
}

} // namespace

PCSTSolution solve_pcst(const PrizedGraph& prized, const PCSTConfig& config) {
    if (prized.nodes.empty())
        throw InputError("solve_pcst: empty graph");
    if (config.exact_node_limit > 0 &&
        prized.nodes.size() <= static_cast<std::size_t>(config.exact_node_limit))
        return solve_pcst_exact(prized, config);
    return solve_heuristic(prized, config);
}

bool is_valid_tree(const PrizedGraph& prized, const PCSTSolution& solution) {
    if (solution.nodes.empty())
        return false;
    std::set<std::string> node_set(solution.nodes.begin(), solution.nodes.end());
    if (node_set.size() != solution.nodes.size())
        return false;
    std::map<std::string, const PrizedNode*> known_nodes;
    for (const auto& n : prized.nodes)
        known_nodes[n.id] = &n;
    for (const auto& id : node_set)
        if (!known_nodes.count(id))
            return false;
    std::map<std::string, const PrizedEdge*> known_edges;
    for (const auto& e : prized.edges)
        known_edges[e.id] = &e;
    std::set<std::string> edge_set(solution.edges.begin(), solution.edges.end());
    if (edge_set.size() != solution.edges.size())
        return false;
    if (edge_set.size() != node_set.size() - 1)
        return false;
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& id : edge_set) {
        auto it = known_edges.find(id);
        if (it == known_edges.end())
            return false;
        const PrizedEdge* e = it->second;
        if (!node_set.count(e->src) || !node_set.count(e->dst) || e->src == e->dst)
            return false;
        adj[e->src].push_back(e->dst);
        adj[e->dst].push_back(e->src);
    }
    std::set<std::string> seen;
    std::vector<std::string> stack{*node_set.begin()};
    while (!stack.empty()) {
        std::string cur = stack.back();
        stack.pop_back();
        if (!seen.insert(cur).second)
            continue;
        for (const auto& next : adj[cur])
            stack.push_back(next);
    }
    return seen == node_set;
}

double recompute_objective(const PrizedGraph& prized, const PCSTSolution& solution) {
    std::map<std::string, double> node_prize;
    for (const auto& n : prized.nodes)
        node_prize[n.id] = n.prize;
    std::map<std::string, double> edge_cost;
    for (const auto& e : prized.edges)
        edge_cost[e.id] = e.effective_cost;
    double objective = 0.0;
    for (const auto& id : solution.nodes)
        objective += node_prize.at(id);
    for (const auto& id : solution.edges)
        objective -= edge_cost.at(id);
    return objective;
}

} // namespace mmgraph
