#pragma once

#include <json.hpp>

#include <optional>
#include <string>

namespace mmgraph {

// Partial configuration: only fields that were explicitly given. Flags merge
// over a config file, which merges over defaults.
struct RunConfig {
    std::optional<std::string> corpus;
    std::optional<std::string> graph;
    std::optional<std::string> out;
    std::optional<std::string> links; // csv, "" or "none" for no linking
    std::optional<double> threshold;
    std::optional<int> pcst_k;
    std::optional<double> edge_cost;
    std::optional<int> si_top_n;
    std::optional<int> image_top_k;
    std::optional<std::string> embedder;
    std::optional<std::string> extractor;
    std::optional<std::string> lmm;
    std::optional<std::string> provider_url;
    std::optional<unsigned> seed;
    std::optional<int> jobs;
    std::optional<int> chunk_size_words;
    std::optional<int> triplets_per_page;
    std::optional<double> temperature;
    std::optional<double> f1_threshold;
    std::optional<std::string> ablate; // ';'-separated link combinations
    std::optional<bool> baseline;
    std::optional<int> baseline_chunk_top_k;
    std::optional<int> baseline_image_top_k;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);
    // Fields set in `overrides` win.
    RunConfig merged_with(const RunConfig& overrides) const;
};

enum class Command { Build, Query, Eval, Nea };

// Fully resolved settings; defaults mirror the reference configuration
// (threshold 0.75, k 5, edge cost 0.5, si_top_n 3, image_top_k 1).
struct Settings {
    std::string command;
    std::string corpus;
    std::string graph;
    std::string out = ".";
    std::string links; // resolved csv ("none" for empty)
    double threshold = 0.75;
    int pcst_k = 5;
    double edge_cost = 0.5;
    double epsilon = 0.01;
    int exact_node_limit = 12;
    int si_top_n = 3;
    int image_top_k = 1;
    std::string embedder = "test";
    std::string extractor = "fallback";
    std::string lmm;
    std::string provider_url;
    unsigned seed = 17;
    int jobs = 1;
    int chunk_size_words = 100;
    int triplets_per_page = 20;
    double temperature = 0.0;
    double f1_threshold = 0.5;
    std::string ablate;
    bool baseline = false;
    int baseline_chunk_top_k = 2;
    int baseline_image_top_k = 2;

    nlohmann::ordered_json to_json() const;
};

// Applies defaults; the links default is all four kinds for build and
// ca,si,ls at query time.
Settings resolve_settings(const RunConfig& config, Command command);

// Graph path with .json swapped for .emb.jsonl (appended otherwise).
std::string embeddings_sidecar_path(const std::string& graph_path);

} // namespace mmgraph
