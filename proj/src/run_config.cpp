#include "mmgraph/run_config.hpp"

#include "mmgraph/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mmgraph {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object())
        throw InputError("config must be a JSON object");
    static const std::set<std::string> known = {
        "corpus",       "graph",       "out",
        "links",        "threshold",   "pcst_k",
        "edge_cost",    "si_top_n",    "image_top_k",
        "embedder",     "extractor",   "lmm",
        "provider_url", "seed",        "jobs",
        "chunk_size_words", "triplets_per_page", "temperature",
        "f1_threshold", "ablate",      "baseline",
        "baseline_chunk_top_k", "baseline_image_top_k"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw InputError("unknown config key: " + key);

    RunConfig c;
    try {
        auto get_str = [&](const char* key, std::optional<std::string>& slot) {
            if (j.contains(key))
                slot = j.at(key).get<std::string>();
        };
        auto get_int = [&](const char* key, std::optional<int>& slot) {
            if (j.contains(key))
                slot = j.at(key).get<int>();
        };
        auto get_double = [&](const char* key, std::optional<double>& slot) {
            if (j.contains(key))
                slot = j.at(key).get<double>();
        };
        get_str("corpus", c.corpus);
        get_str("graph", c.graph);
        get_str("out", c.out);
        get_str("links", c.links);
        get_double("threshold", c.threshold);
        get_int("pcst_k", c.pcst_k);
        get_double("edge_cost", c.edge_cost);
        get_int("si_top_n", c.si_top_n);
        get_int("image_top_k", c.image_top_k);
        get_str("embedder", c.embedder);
        get_str("extractor", c.extractor);
        get_str("lmm", c.lmm);
        get_str("provider_url", c.provider_url);
        if (j.contains("seed"))
            c.seed = j.at("seed").get<unsigned>();
        get_int("jobs", c.jobs);
        get_int("chunk_size_words", c.chunk_size_words);
        get_int("triplets_per_page", c.triplets_per_page);
        get_double("temperature", c.temperature);
        get_double("f1_threshold", c.f1_threshold);
        get_str("ablate", c.ablate);
        if (j.contains("baseline"))
            c.baseline = j.at("baseline").get<bool>();
        get_int("baseline_chunk_top_k", c.baseline_chunk_top_k);
        get_int("baseline_image_top_k", c.baseline_image_top_k);
    } catch (const json::exception& e) {
        throw InputError(std::string("bad config value: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    json parsed;
    try {
        parsed = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw InputError("config file " + path + " is not valid JSON: " + e.what());
    }
    return from_json(parsed);
}

RunConfig RunConfig::merged_with(const RunConfig& overrides) const {
    RunConfig out = *this;
    auto take = [](auto& dst, const auto& src) {
        if (src)
            dst = src;
    };
    take(out.corpus, overrides.corpus);
    take(out.graph, overrides.graph);
    take(out.out, overrides.out);
    take(out.links, overrides.links);
    take(out.threshold, overrides.threshold);
    take(out.pcst_k, overrides.pcst_k);
    take(out.edge_cost, overrides.edge_cost);
    take(out.si_top_n, overrides.si_top_n);
    take(out.image_top_k, overrides.image_top_k);
    take(out.embedder, overrides.embedder);
    take(out.extractor, overrides.extractor);
    take(out.lmm, overrides.lmm);
    take(out.provider_url, overrides.provider_url);
    take(out.seed, overrides.seed);
    take(out.jobs, overrides.jobs);
    take(out.chunk_size_words, overrides.chunk_size_words);
    take(out.triplets_per_page, overrides.triplets_per_page);
    take(out.temperature, overrides.temperature);
    take(out.f1_threshold, overrides.f1_threshold);
    take(out.ablate, overrides.ablate);
    take(out.baseline, overrides.baseline);
    take(out.baseline_chunk_top_k, overrides.baseline_chunk_top_k);
    take(out.baseline_image_top_k, overrides.baseline_image_top_k);
    return out;
}

Settings resolve_settings(const RunConfig& config, Command command) {
    Settings s;
    switch (command) {
    case Command::Build: s.command = "build"; break;
    case Command::Query: s.command = "query"; break;
    case Command::Eval: s.command = "eval"; break;
    case Command::Nea: s.command = "nea"; break;
    }
    if (config.corpus)
        s.corpus = *config.corpus;
    if (config.out)
        s.out = *config.out;
    s.graph = config.graph ? *config.graph : s.out + "/graph.json";
    if (config.links)
        s.links = config.links->empty() ? "none" : *config.links;
    else
        s.links = command == Command::Build ? "ca,si,lp,ls" : "ca,si,ls";
    if (config.threshold)
        s.threshold = *config.threshold;
    if (config.pcst_k)
        s.pcst_k = *config.pcst_k;
    if (config.edge_cost)
        s.edge_cost = *config.edge_cost;
    if (config.si_top_n)
        s.si_top_n = *config.si_top_n;
    if (config.image_top_k)
        s.image_top_k = *config.image_top_k;
    if (config.embedder)
        s.embedder = *config.embedder;
    if (config.extractor)
        s.extractor = *config.extractor;
    if (config.lmm)
        s.lmm = *config.lmm;
    if (config.provider_url)
        s.provider_url = *config.provider_url;
    if (config.seed)
        s.seed = *config.seed;
    if (config.jobs)
        s.jobs = *config.jobs;
    if (config.chunk_size_words)
        s.chunk_size_words = *config.chunk_size_words;
    if (config.triplets_per_page)
        s.triplets_per_page = *config.triplets_per_page;
    if (config.temperature)
        s.temperature = *config.temperature;
    if (config.f1_threshold)
        s.f1_threshold = *config.f1_threshold;
    if (config.ablate)
        s.ablate = *config.ablate;
    if (config.baseline)
        s.baseline = *config.baseline;
    if (config.baseline_chunk_top_k)
        s.baseline_chunk_top_k = *config.baseline_chunk_top_k;
    if (config.baseline_image_top_k)
        s.baseline_image_top_k = *config.baseline_image_top_k;

    if (s.threshold < 0.0 || s.threshold > 1.0)
        throw InputError("threshold must be in [0, 1]");
    if (s.pcst_k < 1)
        throw InputError("pcst_k must be >= 1");
    if (s.edge_cost < 0.0)
        throw InputError("edge_cost must be >= 0");
    if (s.si_top_n < 1)
        throw InputError("si_top_n must be >= 1");
    if (s.image_top_k < 0)
        throw InputError("image_top_k must be >= 0");
    if (s.jobs < 1)
        throw InputError("jobs must be >= 1");
    if (s.chunk_size_words < 1)
        throw InputError("chunk_size_words must be >= 1");
    if (s.triplets_per_page < 1)
        throw InputError("triplets_per_page must be >= 1");
    if (s.f1_threshold < 0.0 || s.f1_threshold > 1.0)
        throw InputError("f1_threshold must be in [0, 1]");
    return s;
}

nlohmann::ordered_json Settings::to_json() const {
    ordered_json j;
    j["command"] = command;
    j["corpus"] = corpus;
    j["graph"] = graph;
    j["out"] = out;
    j["links"] = links;
    j["threshold"] = threshold;
    j["pcst_k"] = pcst_k;
    j["edge_cost"] = edge_cost;
    j["epsilon"] = epsilon;
    j["exact_node_limit"] = exact_node_limit;
    j["si_top_n"] = si_top_n;
    j["image_top_k"] = image_top_k;
    j["embedder"] = embedder;
    j["extractor"] = extractor;
    j["lmm"] = lmm;
    j["provider_url"] = provider_url;
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["chunk_size_words"] = chunk_size_words;
    j["triplets_per_page"] = triplets_per_page;
    j["temperature"] = temperature;
    j["f1_threshold"] = f1_threshold;
    j["ablate"] = ablate;
    j["baseline"] = baseline;
    j["baseline_chunk_top_k"] = baseline_chunk_top_k;
    j["baseline_image_top_k"] = baseline_image_top_k;
    return j;
}

std::string embeddings_sidecar_path(const std::string& graph_path) {
    const std::string suffix = ".json";
    if (graph_path.size() > suffix.size() &&
        graph_path.compare(graph_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return graph_path.substr(0, graph_path.size() - suffix.size()) + ".emb.jsonl";
    return graph_path + ".emb.jsonl";
}

} // namespace mmgraph
