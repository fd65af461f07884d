#include "mmgraph/commands.hpp"

#include "mmgraph/errors.hpp"
#include "mmgraph/evalkit.hpp"
#include "mmgraph/graph.hpp"
#include "mmgraph/pcst.hpp"
#include "mmgraph/text.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

namespace mmgraph {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write " + path);
    out << content;
}

void ensure_out_dir(const Settings& settings) {
    if (!settings.out.empty())
        fs::create_directories(settings.out);
}

std::string out_path(const Settings& settings, const std::string& name) {
    return (fs::path(settings.out) / name).string();
}

// Block-partitioned worker pool; results land by index, so the output is
// independent of scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers)
                    fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool)
        t.join();
    for (const auto& err : errors)
        if (err)
            std::rethrow_exception(err);
}

ordered_json nea_record_json(const NEARecord& record) {
    ordered_json j;
    j["qid"] = record.qid;
    j["original_question"] = record.original_question;
    j["anonymized_question"] = record.anonymized_question;
    j["alias"] = record.alias;
    j["original_phrase"] = record.original_phrase;
    j["injected_sentence"] = record.injected_sentence;
    return j;
}

bool doc_contains(const Document& document, const std::string& phrase) {
    auto has = [&](const std::string& text) { return text.find(phrase) != std::string::npos; };
    if (has(document.title))
        return true;
    for (const auto& section : document.sections)
        if (has(section.heading) || has(section.body))
            return true;
    for (const auto& image : document.images)
        if (image.caption && has(*image.caption))
            return true;
    return false;
}

// Longest mention wins; mentions found in the document outrank absent ones.
std::string pick_target_phrase(const std::vector<EntityMention>& mentions,
                               const Document& document) {
    const EntityMention* best = nullptr;
    bool best_present = false;
    for (const auto& m : mentions) {
        bool present = doc_contains(document, m.surface);
        bool better = !best || (present && !best_present) ||
                      (present == best_present && m.surface.size() > best->surface.size());
        if (better) {
            best = &m;
            best_present = present;
        }
    }
    return best->surface;
}

} // namespace

std::unique_ptr<EmbeddingProvider> make_embedder(const Settings& settings) {
    const std::string& spec = settings.embedder;
    if (spec == "test")
        return std::make_unique<TestEmbedder>(settings.seed);
    if (spec.rfind("test:", 0) == 0) {
        int dim = 0;
        try {
            dim = std::stoi(spec.substr(5));
        } catch (const std::exception&) {
            throw InputError("bad embedder dimension in \"" + spec + "\"");
        }
        if (dim < 1)
            throw InputError("embedder dimension must be >= 1");
        return std::make_unique<TestEmbedder>(settings.seed, dim);
    }
    if (spec.rfind("cache:", 0) == 0)
        return std::make_unique<CacheOnlyEmbedder>(spec.substr(6));
    if (spec == "remote") {
        if (settings.provider_url.empty())
            throw InputError("embedder \"remote\" needs --provider-url");
        return std::make_unique<RemoteEmbedder>(settings.provider_url);
    }
    throw InputError("unknown embedder \"" + spec + "\" (expected test|test:<dim>|cache:<path>|remote)");
}

std::unique_ptr<ExtractionProvider> make_extractor(const Settings& settings) {
    const std::string& spec = settings.extractor;
    if (spec == "fallback")
        return std::make_unique<FallbackExtractor>();
    if (spec.rfind("fixture:", 0) == 0)
        return std::make_unique<FixtureExtractionProvider>(spec.substr(8));
    if (spec == "remote") {
        if (settings.provider_url.empty())
            throw InputError("extractor \"remote\" needs --provider-url");
        return std::make_unique<RemoteExtractionProvider>(settings.provider_url);
    }
    throw InputError("unknown extractor \"" + spec + "\" (expected fallback|fixture:<path>|remote)");
}

std::unique_ptr<LMMClient> make_lmm(const Settings& settings) {
    const std::string& spec = settings.lmm;
    if (spec.empty())
        return nullptr;
    if (spec == "echo")
        return std::make_unique<EchoLMMClient>();
    if (spec.rfind("fixture:", 0) == 0)
        return std::make_unique<FixtureLMMClient>(spec.substr(8));
    if (spec == "remote") {
        if (settings.provider_url.empty())
            throw InputError("lmm \"remote\" needs --provider-url");
        return std::make_unique<RemoteLMMClient>(settings.provider_url, settings.temperature);
    }
    throw InputError("unknown lmm \"" + spec + "\" (expected echo|fixture:<path>|remote)");
}

std::set<LinkKind> link_kinds_from_label(const std::string& label) {
    std::string trimmed = collapse_whitespace(label);
    if (trimmed.empty() || trimmed == "none")
        return {};
    return parse_link_kinds(trimmed);
}

RetrievalConfig retrieval_config(const Settings& settings) {
    RetrievalConfig rc;
    rc.prune_threshold = settings.threshold;
    rc.pcst.k = settings.pcst_k;
    rc.pcst.edge_cost = settings.edge_cost;
    rc.pcst.epsilon = settings.epsilon;
    rc.pcst.exact_node_limit = settings.exact_node_limit;
    rc.image_top_k = settings.image_top_k;
    rc.link_kinds = link_kinds_from_label(settings.links);
    rc.baseline_chunk_top_k = settings.baseline_chunk_top_k;
    rc.baseline_image_top_k = settings.baseline_image_top_k;
    return rc;
}

nlohmann::ordered_json cmd_build(const Settings& settings) {
    if (settings.corpus.empty())
        throw InputError("build requires --corpus");
    Corpus corpus = load_corpus(settings.corpus);
    auto extractor = make_extractor(settings);
    auto embedder = make_embedder(settings);

    std::vector<Triplet> triplets;
    for (const auto& document : corpus.documents)
        for (auto& t : extract_document_triplets(document, *extractor, settings.jobs))
            triplets.push_back(std::move(t));

    GraphBuildConfig build_config;
    build_config.link_kinds = link_kinds_from_label(settings.links);
    build_config.si_top_n = settings.si_top_n;
    build_config.triplets_per_page = settings.triplets_per_page;

    EmbeddingStore store;
    MMGraph graph = build_graph(corpus, triplets, build_config, *extractor, *embedder, store);

    ensure_out_dir(settings);
    fs::path graph_parent = fs::path(settings.graph).parent_path();
    if (!graph_parent.empty())
        fs::create_directories(graph_parent);
    save_graph(graph, settings.graph);
    const std::string embeddings_path = embeddings_sidecar_path(settings.graph);
    store.save(embeddings_path);

    ordered_json counts_by_kind;
    for (LinkKind kind : {LinkKind::Caption, LinkKind::Similarity, LinkKind::LayoutPage,
                          LinkKind::LayoutSection}) {
        int n = 0;
        for (const auto& link : graph.links)
            n += link.kind == kind;
        counts_by_kind[to_string(kind)] = n;
    }

    ordered_json report;
    report["report"] = "build";
    report["config"] = settings.to_json();
    report["corpus_id"] = graph.corpus_id;
    report["documents"] = corpus.documents.size();
    report["triplets"] = triplets.size();
    report["nodes"] = graph.nodes.size();
    report["edges"] = graph.edges.size();
    report["images"] = graph.images.size();
    report["components"] = graph.components().size();
    report["links"] = graph.links.size();
    report["links_by_kind"] = counts_by_kind;
    report["embeddings"] = store.size();
    report["graph_path"] = settings.graph;
    report["embeddings_path"] = embeddings_path;
    write_file(out_path(settings, "build_report.json"), report.dump(2) + "\n");
    return report;
}

nlohmann::ordered_json cmd_query(const Settings& settings, const std::string& question) {
    if (question.empty())
        throw InputError("query requires --question");
    MMGraph graph = load_graph(settings.graph);
    EmbeddingStore store = EmbeddingStore::load(embeddings_sidecar_path(settings.graph));
    auto extractor = make_extractor(settings);
    auto embedder = make_embedder(settings);

    RetrievedContext context =
        retrieve(graph, question, *extractor, *embedder, store, retrieval_config(settings));

    ensure_out_dir(settings);
    const std::string context_path = out_path(settings, "context.json");
    const std::string trace_path = out_path(settings, "trace.jsonl");
    write_file(context_path, context_to_json(context).dump(2) + "\n");
    write_file(trace_path, trace_to_jsonl(context.trace));

    ordered_json report;
    report["report"] = "query";
    report["config"] = settings.to_json();
    report["question"] = question;
    report["triplets"] = context.triplets.size();
    report["images"] = context.images.size();
    report["linked_texts"] = context.linked_texts.size();
    report["word_count"] = context.word_count();
    report["trace_events"] = context.trace.size();
    report["context_path"] = context_path;
    report["trace_path"] = trace_path;
    report["answer"] = nullptr;

    if (auto client = make_lmm(settings)) {
        GenerationConfig gen_config;
        gen_config.temperature = settings.temperature;
        Prompt prompt = build_prompt(context, question, {}, gen_config);
        GenerationRecord record = generate_answer(prompt, *client);
        ordered_json answer;
        answer["client"] = client->identity();
        answer["prompt_hash"] = record.prompt_hash;
        answer["text"] = record.text;
        const std::string answer_path = out_path(settings, "answer.json");
        write_file(answer_path, answer.dump(2) + "\n");
        report["answer"] = answer;
        report["answer_path"] = answer_path;
    }
    return report;
}

nlohmann::ordered_json cmd_eval(const Settings& settings, const std::string& testset_path) {
    if (testset_path.empty())
        throw InputError("eval requires --testset");
    std::vector<EvalQuestion> questions = load_testset(testset_path);
    if (questions.empty())
        throw InputError("testset is empty: " + testset_path);

    MMGraph graph = load_graph(settings.graph);
    EmbeddingStore store = EmbeddingStore::load(embeddings_sidecar_path(settings.graph));
    auto extractor = make_extractor(settings);
    auto embedder = make_embedder(settings);
    auto client = make_lmm(settings);
    MatchConfig match{settings.f1_threshold};
    GenerationConfig gen_config;
    gen_config.temperature = settings.temperature;

    auto judge_row = [&](const std::string& label,
                         const std::vector<RetrievedContext>& contexts) {
        std::vector<HitRecord> records;
        records.reserve(questions.size());
        for (std::size_t i = 0; i < questions.size(); ++i)
            records.push_back(judge_hit(questions[i], contexts[i], match));
        ordered_json row;
        row["links"] = label;
        row["recall"] = recall_report_to_json(recall_ratio(records, contexts));
        if (client) {
            std::vector<std::string> raw;
            raw.reserve(questions.size());
            for (std::size_t i = 0; i < questions.size(); ++i) {
                Prompt prompt =
                    build_prompt(contexts[i], questions[i].question, questions[i].choices,
                                 gen_config);
                raw.push_back(generate_answer(prompt, *client).text);
            }
            row["qa"] = qa_report_to_json(grade_qa(raw, questions));
        }
        return row;
    };

    // One row per ablation entry ("none;ca;ca,ls"); default is the resolved
    // link set alone. Labels are canonicalized through the kind set.
    std::vector<std::pair<std::string, std::set<LinkKind>>> combos;
    if (!settings.ablate.empty()) {
        std::string entry;
        std::istringstream in(settings.ablate);
        while (std::getline(in, entry, ';')) {
            std::string trimmed = collapse_whitespace(entry);
            if (trimmed.empty())
                throw InputError("empty ablation entry; use the word \"none\"");
            auto kinds = link_kinds_from_label(trimmed);
            combos.emplace_back(kinds.empty() ? "none" : link_kinds_to_string(kinds), kinds);
        }
    } else {
        auto kinds = link_kinds_from_label(settings.links);
        combos.emplace_back(kinds.empty() ? "none" : link_kinds_to_string(kinds), kinds);
    }

    ordered_json rows = ordered_json::array();
    for (const auto& [label, kinds] : combos) {
        RetrievalConfig rc = retrieval_config(settings);
        rc.link_kinds = kinds;
        std::vector<RetrievedContext> contexts(questions.size());
        parallel_for(questions.size(), settings.jobs, [&](std::size_t i) {
            contexts[i] =
                retrieve(graph, questions[i].question, *extractor, *embedder, store, rc);
        });
        rows.push_back(judge_row(label, contexts));
    }

    if (settings.baseline) {
        if (settings.corpus.empty())
            throw InputError("baseline eval requires --corpus for text chunks");
        Corpus corpus = load_corpus(settings.corpus);
        std::vector<TextChunk> chunks;
        for (const auto& document : corpus.documents)
            for (auto& chunk : chunk_text(document, settings.chunk_size_words))
                chunks.push_back(std::move(chunk));
        RetrievalConfig rc = retrieval_config(settings);
        std::vector<RetrievedContext> contexts(questions.size());
        parallel_for(questions.size(), settings.jobs, [&](std::size_t i) {
            contexts[i] = baseline_retrieve(chunks, graph.images, questions[i].question,
                                            *embedder, store, rc);
        });
        rows.push_back(judge_row("baseline", contexts));
    }

    ordered_json report;
    report["report"] = "eval";
    report["config"] = settings.to_json();
    report["testset"] = testset_path;
    report["questions"] = questions.size();
    report["rows"] = rows;
    ensure_out_dir(settings);
    write_file(out_path(settings, "eval_report.json"), report.dump(2) + "\n");
    return report;
}

nlohmann::ordered_json cmd_nea(const Settings& settings, const std::string& testset_path,
                               int count) {
    if (settings.corpus.empty())
        throw InputError("nea requires --corpus");
    if (testset_path.empty())
        throw InputError("nea requires --testset");
    if (count < 0)
        throw InputError("count must be >= 0");
    std::vector<EvalQuestion> questions = load_testset(testset_path);

    std::vector<EvalQuestion> available;
    for (const auto& q : questions)
        if (q.qtype == QType::ImageImage)
            available.push_back(q);
    if (count == 0)
        count = static_cast<int>(available.size());
    if (count > static_cast<int>(available.size()))
        throw InputError("requested " + std::to_string(count) + " NEA pairs but only " +
                         std::to_string(available.size()) + " image_image questions exist");
    if (count == 0)
        throw InputError("no image_image questions in " + testset_path);

    Corpus corpus = load_corpus(settings.corpus);
    auto extractor = make_extractor(settings);
    std::mt19937 rng(settings.seed);

    std::vector<EvalQuestion> before;
    std::vector<EvalQuestion> after;
    std::vector<NEARecord> records;
    for (int i = 0; i < count; ++i) {
        const EvalQuestion& question = available[i];
        Document* document = nullptr;
        for (auto& d : corpus.documents)
            if (d.doc_id == question.doc_id)
                document = &d;
        if (!document)
            throw InputError(question.qid + ": document " + question.doc_id +
                             " missing from corpus");
        auto mentions = extract_query_entities(question.question, *extractor);
        if (mentions.empty())
            throw InputError(question.qid + ": no entity phrase found to anonymize");
        std::string phrase = pick_target_phrase(mentions, *document);
        std::string alias = fresh_alias(rng, corpus);
        NEAResult result = apply_nea(question, *document, alias, phrase);
        *document = std::move(result.document);
        before.push_back(question);
        after.push_back(std::move(result.question));
        records.push_back(std::move(result.record));
    }

    ensure_out_dir(settings);
    const std::string before_path = out_path(settings, "nea_before.jsonl");
    const std::string after_path = out_path(settings, "nea_after.jsonl");
    const std::string corpus_path = out_path(settings, "nea_corpus.json");
    const std::string records_path = out_path(settings, "nea_records.json");
    save_testset(before, before_path);
    save_testset(after, after_path);
    save_corpus(corpus, corpus_path);

    ordered_json records_json = ordered_json::array();
    for (const auto& record : records)
        records_json.push_back(nea_record_json(record));
    write_file(records_path, records_json.dump(2) + "\n");

    ordered_json report;
    report["report"] = "nea";
    report["config"] = settings.to_json();
    report["testset"] = testset_path;
    report["available"] = available.size();
    report["count"] = count;
    report["records"] = records_json;
    ordered_json paths;
    paths["before"] = before_path;
    paths["after"] = after_path;
    paths["corpus"] = corpus_path;
    paths["records"] = records_path;
    report["paths"] = paths;
    write_file(out_path(settings, "nea_report.json"), report.dump(2) + "\n");
    return report;
}

} // namespace mmgraph
