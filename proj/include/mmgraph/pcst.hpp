#pragma once

#include "mmgraph/embedding.hpp"
#include "mmgraph/graph.hpp"

#include <string>
#include <vector>

namespace mmgraph {

struct PrizedNode {
    std::string id;
    double prize = 0.0;
    double relevance = 0.0;
};

struct PrizedEdge {
    std::string id;
    std::string src;
    std::string dst;
    double base_cost = 0.0;
    double prize = 0.0;
    double effective_cost = 0.0; // max(epsilon, base_cost - prize)
};

struct PCSTConfig {
    int k = 5;
    double edge_cost = 0.5;
    double epsilon = 0.01;
    int exact_node_limit = 12;
};

// Undirected; nodes/edges sorted by id.
struct PrizedGraph {
    std::vector<PrizedNode> nodes;
    std::vector<PrizedEdge> edges;
};

// objective = sum of node prizes - sum of effective edge costs; edges form a
// tree spanning exactly the node set.
struct PCSTSolution {
    std::vector<std::string> nodes; // sorted
    std::vector<std::string> edges; // sorted
    double objective = 0.0;
};

// Relevance = max cosine against the query-entity vectors; top-k by relevance
// get prize k - rank (rank 0-based, ties by ascending id), others 0. Same for
// edges via their relation-text embeddings, folded into effective costs.
PrizedGraph assign_prizes(const MMGraph& graph, const std::vector<std::string>& component,
                          const std::vector<EmbeddingVector>& query_vectors,
                          const EmbeddingStore& store, const PCSTConfig& config);

// Exhaustive optimum over all connected node subsets (node count must be
// <= exact_node_limit). Tie-break: fewer nodes, then lexicographic node ids.
PCSTSolution solve_pcst_exact(const PrizedGraph& prized, const PCSTConfig& config);

// Exact below exact_node_limit, otherwise a grow-and-prune heuristic whose
// objective is always >= the best single-node prize.
PCSTSolution solve_pcst(const PrizedGraph& prized, const PCSTConfig& config);

// Structural check: edges exist, endpoints inside the node set, connected,
// |edges| = |nodes| - 1.
bool is_valid_tree(const PrizedGraph& prized, const PCSTSolution& solution);
double recompute_objective(const PrizedGraph& prized, const PCSTSolution& solution);

} // namespace mmgraph
