#include "mmgraph/extraction.hpp"

#include "mmgraph/errors.hpp"
#include "mmgraph/parallel.hpp"
#include "mmgraph/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace mmgraph {

using nlohmann::json;

namespace {

struct Token {
    std::string text;
    std::size_t begin;
    std::size_t end;
};

std::vector<Token> tokens_with_pos(std::string_view text, std::size_t offset) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        if (i > start)
            out.push_back({std::string(text.substr(start, i - start)), offset + start, offset + i});
    }
    return out;
}

const std::set<std::string>& stop_words() {
    static const std::set<std::string> words = {
        "a",     "an",    "and",   "are",   "as",    "at",    "but",   "by",
        "did",   "do",    "does",  "during","for",   "from",  "he",    "her",
        "here",  "his",   "how",   "i",     "if",    "in",    "is",    "it",
        "its",   "my",    "no",    "not",   "of",    "on",    "or",    "our",
        "she",   "so",    "that",  "the",   "their", "there", "these", "they",
        "this",  "those", "to",    "was",   "we",    "were",  "what",  "when",
        "where", "which", "while", "who",   "whom",  "whose", "why",   "with",
        "yes",   "you",   "your",
    };
    return words;
}

bool qualifies_as_entity_token(const std::string& token, bool sentence_initial) {
    std::string core = trim_punct(token);
    if (core.empty())
        return false;
    bool has_alpha = false;
    bool all_upper = true;
    char first_alpha = 0;
    for (char c : core) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            if (!has_alpha)
                first_alpha = c;
            has_alpha = true;
            if (std::islower(static_cast<unsigned char>(c)))
                all_upper = false;
        }
    }
    if (!has_alpha)
        return false;
    bool capitalized = std::isupper(static_cast<unsigned char>(first_alpha)) != 0;
    bool all_caps = all_upper;
    if (!capitalized && !all_caps)
        return false;
    if (sentence_initial && stop_words().count(lowercase(core)))
        return false;
    return true;
}

struct EntityRun {
    std::size_t first_token;
    std::size_t last_token;
    std::string surface;
};

std::vector<EntityRun> entity_runs(std::string_view text, const std::vector<Token>& toks) {
    std::vector<EntityRun> runs;
    std::size_t i = 0;
    while (i < toks.size()) {
        if (!qualifies_as_entity_token(toks[i].text, i == 0)) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i + 1 < toks.size() && qualifies_as_entity_token(toks[i + 1].text, false))
            ++i;
        EntityRun run;
        run.first_token = start;
        run.last_token = i;
        std::size_t b = toks[start].begin;
        std::size_t e = toks[i].end;
        run.surface = trim_punct(text.substr(b, e - b));
        if (!run.surface.empty())
            runs.push_back(std::move(run));
        ++i;
    }
    return runs;
}

} // namespace

std::vector<RawTriplet> FallbackExtractor::triplets(const std::string& text) {
    std::vector<RawTriplet> out;
    for (auto [sb, se] : split_sentences(text)) {
        std::string_view sentence(text.data() + sb, se - sb);
        auto toks = tokens_with_pos(sentence, 0);
        auto runs = entity_runs(sentence, toks);
        if (runs.size() < 2)
            continue;
        const EntityRun& subj = runs.front();
        const EntityRun& obj = runs.back();
        std::string relation;
        for (std::size_t t = subj.last_token + 1; t < obj.first_token; ++t) {
            if (!relation.empty())
                relation.push_back(' ');
            relation += toks[t].text;
        }
        relation = trim_punct(relation);
        if (relation.empty())
            continue;
        RawTriplet raw;
        raw.subject = subj.surface;
        raw.relation = relation;
        raw.object = obj.surface;
        raw.begin = static_cast<int>(sb);
        raw.end = static_cast<int>(se);
        out.push_back(std::move(raw));
    }
    return out;
}

std::vector<std::string> FallbackExtractor::entities(const std::string& text) {
    std::vector<std::string> out;
    for (auto [sb, se] : split_sentences(text)) {
        std::string_view sentence(text.data() + sb, se - sb);
        auto toks = tokens_with_pos(sentence, 0);
        for (auto& run : entity_runs(sentence, toks))
            out.push_back(run.surface);
    }
    return out;
}

FixtureExtractionProvider::FixtureExtractionProvider(const std::string& sidecar_path) {
    std::ifstream in(sidecar_path, std::ios::binary);
    if (!in)
        throw InputError("cannot open extraction sidecar: " + sidecar_path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string contents = buf.str();
    identity_ = "deterministic-fixture:" + content_hash(contents);

    std::istringstream lines(contents);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.empty())
            continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw InputError("sidecar line " + std::to_string(lineno) + " is not valid JSON: " +
                             e.what());
        }
        std::string task = row.value("task", "");
        std::string key;
        if (row.contains("hash"))
            key = row["hash"].get<std::string>();
        else if (row.contains("text"))
            key = content_hash(row["text"].get<std::string>());
        else
            throw InputError("sidecar line " + std::to_string(lineno) +
                             " needs a \"hash\" or \"text\" key");
        if (task == "triplets") {
            std::vector<RawTriplet> ts;
            for (const auto& triple : row.at("triplets")) {
                if (!triple.is_array() || triple.size() != 3)
                    throw InputError("sidecar line " + std::to_string(lineno) +
                                     ": triplets must be [s,r,o] arrays");
                RawTriplet raw;
                raw.subject = triple[0].get<std::string>();
                raw.relation = triple[1].get<std::string>();
                raw.object = triple[2].get<std::string>();
                raw.begin = 0;
                raw.end = -1; // resolved to the full input at replay time
                ts.push_back(std::move(raw));
            }
            triplets_[key] = std::move(ts);
            caps_.triplets = true;
        } else if (task == "entities") {
            entities_[key] = row.at("entities").get<std::vector<std::string>>();
            caps_.entities = true;
        } else {
            throw InputError("sidecar line " + std::to_string(lineno) + ": unknown task \"" +
                             task + "\"");
        }
    }
}

std::vector<RawTriplet> FixtureExtractionProvider::triplets(const std::string& text) {
    auto it = triplets_.find(content_hash(text));
    if (it == triplets_.end())
        throw ProviderError(identity_, "no triplets entry for input hash " + content_hash(text));
    auto out = it->second;
    for (auto& raw : out)
        if (raw.end < 0)
            raw.end = static_cast<int>(text.size());
    return out;
}

std::vector<std::string> FixtureExtractionProvider::entities(const std::string& text) {
    auto it = entities_.find(content_hash(text));
    if (it == entities_.end())
        throw ProviderError(identity_, "no entities entry for input hash " + content_hash(text));
    return it->second;
}

RemoteExtractionProvider::RemoteExtractionProvider(const std::string& base_url, int timeout_seconds)
    : base_url_(base_url), timeout_seconds_(timeout_seconds) {}

std::vector<std::vector<std::string>> RemoteExtractionProvider::post(const std::string& task,
                                                                     const std::string& text,
                                                                     const std::string& key) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    json body = {{"task", task}, {"text", text}};
    auto res = client.Post("/extract", body.dump(), "application/json");
    if (!res)
        throw ProviderError(identity(), "transport failure: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProviderError(identity(), "HTTP " + std::to_string(res->status));
    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::exception& e) {
        throw ProviderError(identity(), std::string("malformed response: ") + e.what());
    }
    if (!parsed.contains(key) || !parsed[key].is_array())
        throw ProviderError(identity(), "response missing \"" + key + "\" array");
    std::vector<std::vector<std::string>> rows;
    try {
        if (key == "triplets") {
            for (const auto& t : parsed[key])
                rows.push_back(t.get<std::vector<std::string>>());
        } else {
            for (const auto& e : parsed[key])
                rows.push_back({e.get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw ProviderError(identity(), std::string("malformed response: ") + e.what());
    }
    return rows;
}

std::vector<RawTriplet> RemoteExtractionProvider::triplets(const std::string& text) {
    std::vector<RawTriplet> out;
    for (auto& row : post("triplets", text, "triplets")) {
        if (row.size() != 3)
            throw ProviderError(identity(), "triplet rows must have 3 elements");
        out.push_back({row[0], row[1], row[2], 0, static_cast<int>(text.size())});
    }
    return out;
}

std::vector<std::string> RemoteExtractionProvider::entities(const std::string& text) {
    std::vector<std::string> out;
    for (auto& row : post("entities", text, "entities"))
        out.push_back(row[0]);
    return out;
}

std::vector<Triplet> extract_triplets(const std::string& text, ExtractionProvider& provider,
                                      const std::string& doc_id, const std::string& section_id) {
    if (text.empty())
        throw InputError("extract_triplets: text must be non-empty");
    auto raw = provider.triplets(text);
    std::vector<Triplet> out;
    std::set<std::string> seen;
    for (auto& r : raw) {
        std::string subject = collapse_whitespace(r.subject);
        std::string relation = collapse_whitespace(r.relation);
        std::string object = collapse_whitespace(r.object);
        if (subject.empty() || relation.empty() || object.empty())
            throw ProviderError(provider.identity(), "malformed provider output: empty triplet field");
        int begin = std::clamp(r.begin, 0, static_cast<int>(text.size()));
        int end = std::clamp(r.end, 0, static_cast<int>(text.size()));
        if (end <= begin) {
            begin = 0;
            end = static_cast<int>(text.size());
        }
        std::string key = normalize_text(subject) + "\x1f" + normalize_text(relation) + "\x1f" +
                          normalize_text(object);
        if (!seen.insert(key).second)
            continue;
        Triplet t;
        t.subject = std::move(subject);
        t.relation = std::move(relation);
        t.object = std::move(object);
        t.doc_id = doc_id;
        t.span_id = SpanRef{section_id, begin, end}.to_id();
        t.source_text = text.substr(static_cast<std::size_t>(begin),
                                    static_cast<std::size_t>(end - begin));
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

std::vector<EntityMention> to_mentions(const std::vector<std::string>& surfaces) {
    std::vector<EntityMention> out;
    std::set<std::string> seen;
    for (const auto& s : surfaces) {
        EntityMention m;
        m.surface = collapse_whitespace(s);
        m.normalized = normalize_text(m.surface);
        if (m.normalized.empty())
            continue;
        if (!seen.insert(m.normalized).second)
            continue;
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace

std::vector<EntityMention> extract_query_entities(const std::string& query,
                                                  ExtractionProvider& provider) {
    if (query.empty())
        throw InputError("extract_query_entities: query must be non-empty");
    return to_mentions(provider.entities(query));
}

std::vector<EntityMention> extract_caption_entities(const std::string& caption,
                                                    ExtractionProvider& provider) {
    if (caption.empty())
        return {};
    return to_mentions(provider.entities(caption));
}

std::vector<Triplet> extract_document_triplets(const Document& document,
                                               ExtractionProvider& provider, int jobs) {
    std::vector<const Section*> with_body;
    for (const auto& s : document.sections)
        if (!s.body.empty())
            with_body.push_back(&s);

    std::vector<std::vector<Triplet>> per_section(with_body.size());
    parallel_for(with_body.size(), jobs, [&](std::size_t i) {
        per_section[i] = extract_triplets(with_body[i]->body, provider, document.doc_id,
                                          with_body[i]->section_id);
    });

    std::vector<Triplet> out;
    std::set<std::string> seen;
    for (auto& batch : per_section) {
        for (auto& t : batch) {
            std::string key = normalize_text(t.subject) + "\x1f" + normalize_text(t.relation) +
                              "\x1f" + normalize_text(t.object);
            if (!seen.insert(key).second)
                continue;
            out.push_back(std::move(t));
        }
    }
    return out;
}

} // namespace mmgraph
