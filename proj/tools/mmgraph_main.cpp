#include <CLI11.hpp>

#include "mmgraph/commands.hpp"
#include "mmgraph/errors.hpp"
#include "mmgraph/run_config.hpp"

#include <iostream>
#include <string>

namespace {

struct CliValues {
    std::string config_path;
    std::string corpus;
    std::string graph;
    std::string out;
    std::string links;
    std::string embedder;
    std::string extractor;
    std::string lmm;
    std::string provider_url;
    std::string ablate;
    std::string question;
    std::string testset;
    double threshold = 0.0;
    double edge_cost = 0.0;
    double temperature = 0.0;
    double f1_threshold = 0.0;
    int pcst_k = 0;
    int si_top_n = 0;
    int image_top_k = 0;
    int jobs = 0;
    int chunk_size_words = 0;
    int triplets_per_page = 0;
    int count = 0;
    unsigned seed = 0;
    bool baseline = false;
};

void add_shared(CLI::App* sub, CliValues& v) {
    sub->add_option("--config", v.config_path, "JSON config file (same keys as the flags)");
    sub->add_option("--corpus", v.corpus, "corpus JSON path");
    sub->add_option("--graph", v.graph, "graph JSON path (default <out>/graph.json)");
    sub->add_option("--links", v.links,
                    "link kinds csv from ca,si,lp,ls; \"\" or \"none\" disables linking");
    sub->add_option("--threshold", v.threshold, "component pruning threshold");
    sub->add_option("--pcst-k", v.pcst_k, "PCST prize depth k");
    sub->add_option("--edge-cost", v.edge_cost, "PCST base edge cost");
    sub->add_option("--si-top-n", v.si_top_n, "similarity links per image");
    sub->add_option("--image-top-k", v.image_top_k, "images expanded per query");
    sub->add_option("--embedder", v.embedder, "test | test:<dim> | cache:<path> | remote");
    sub->add_option("--extractor", v.extractor, "fallback | fixture:<path> | remote");
    sub->add_option("--lmm", v.lmm, "echo | fixture:<path> | remote");
    sub->add_option("--provider-url", v.provider_url, "remote provider base url");
    sub->add_option("--temperature", v.temperature, "generation temperature");
    sub->add_option("--f1-threshold", v.f1_threshold, "image_text token-F1 match threshold");
    sub->add_option("--chunk-size-words", v.chunk_size_words, "baseline chunk size in words");
    sub->add_option("--triplets-per-page", v.triplets_per_page, "pagination budget");
    sub->add_option("--seed", v.seed, "deterministic seed");
    sub->add_option("--jobs", v.jobs, "worker threads");
    sub->add_option("--out", v.out, "output directory");
}

mmgraph::RunConfig flags_of(CLI::App* sub, const CliValues& v) {
    mmgraph::RunConfig f;
    if (sub->count("--corpus"))
        f.corpus = v.corpus;
    if (sub->count("--graph"))
        f.graph = v.graph;
    if (sub->count("--out"))
        f.out = v.out;
    if (sub->count("--links"))
        f.links = v.links;
    if (sub->count("--threshold"))
        f.threshold = v.threshold;
    if (sub->count("--pcst-k"))
        f.pcst_k = v.pcst_k;
    if (sub->count("--edge-cost"))
        f.edge_cost = v.edge_cost;
    if (sub->count("--si-top-n"))
        f.si_top_n = v.si_top_n;
    if (sub->count("--image-top-k"))
        f.image_top_k = v.image_top_k;
    if (sub->count("--embedder"))
        f.embedder = v.embedder;
    if (sub->count("--extractor"))
        f.extractor = v.extractor;
    if (sub->count("--lmm"))
        f.lmm = v.lmm;
    if (sub->count("--provider-url"))
        f.provider_url = v.provider_url;
    if (sub->count("--seed"))
        f.seed = v.seed;
    if (sub->count("--jobs"))
        f.jobs = v.jobs;
    if (sub->count("--chunk-size-words"))
        f.chunk_size_words = v.chunk_size_words;
    if (sub->count("--triplets-per-page"))
        f.triplets_per_page = v.triplets_per_page;
    if (sub->count("--temperature"))
        f.temperature = v.temperature;
    if (sub->count("--f1-threshold"))
        f.f1_threshold = v.f1_threshold;
    return f;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-modal graph retrieval engine"};
    app.require_subcommand(1);
    CliValues v;

    CLI::App* build = app.add_subcommand("build", "build the unified graph from a corpus");
    add_shared(build, v);

    CLI::App* query = app.add_subcommand("query", "retrieve a context for one question");
    add_shared(query, v);
    query->add_option("--question", v.question, "the question text")->required();

    CLI::App* eval = app.add_subcommand("eval", "recall and QA evaluation over a testset");
    add_shared(eval, v);
    eval->add_option("--testset", v.testset, "testset JSONL path")->required();
    eval->add_option("--ablate", v.ablate, "';'-separated link combos, e.g. \"none;ca;ca,ls\"");
    eval->add_flag("--baseline", v.baseline, "append a similarity-baseline row");

    CLI::App* nea = app.add_subcommand("nea", "generate anonymized question pairs");
    add_shared(nea, v);
    nea->add_option("--testset", v.testset, "testset JSONL path")->required();
    nea->add_option("--count", v.count, "pairs to generate (default: every image_image question)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    mmgraph::Command command = mmgraph::Command::Build;
    if (sub == query)
        command = mmgraph::Command::Query;
    else if (sub == eval)
        command = mmgraph::Command::Eval;
    else if (sub == nea)
        command = mmgraph::Command::Nea;

    try {
        mmgraph::RunConfig file_config;
        if (sub->count("--config"))
            file_config = mmgraph::RunConfig::from_file(v.config_path);
        mmgraph::RunConfig flags = flags_of(sub, v);
        if (sub == eval) {
            if (sub->count("--ablate"))
                flags.ablate = v.ablate;
            if (sub->count("--baseline"))
                flags.baseline = true;
        }
        mmgraph::Settings settings =
            mmgraph::resolve_settings(file_config.merged_with(flags), command);

        nlohmann::ordered_json report;
        switch (command) {
        case mmgraph::Command::Build: report = mmgraph::cmd_build(settings); break;
        case mmgraph::Command::Query: report = mmgraph::cmd_query(settings, v.question); break;
        case mmgraph::Command::Eval: report = mmgraph::cmd_eval(settings, v.testset); break;
        case mmgraph::Command::Nea: report = mmgraph::cmd_nea(settings, v.testset, v.count); break;
        }
        std::cout << report.dump(2) << "\n";
        return 0;
    } catch (const mmgraph::ProviderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const mmgraph::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
