#include "mmgraph/corpus.hpp"

#include "mmgraph/errors.hpp"
#include "mmgraph/extraction.hpp"
#include "mmgraph/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mmgraph {

using nlohmann::json;
using nlohmann::ordered_json;

std::string SpanRef::to_id() const {
    return section_id + ":" + std::to_string(begin) + "-" + std::to_string(end);
}

SpanRef SpanRef::parse(const std::string& span_id) {
    auto colon = span_id.rfind(':');
    auto dash = span_id.rfind('-');
    if (colon == std::string::npos || dash == std::string::npos || dash < colon)
        throw InputError("malformed span id: " + span_id);
    SpanRef ref;
    ref.section_id = span_id.substr(0, colon);
    try {
        ref.begin = std::stoi(span_id.substr(colon + 1, dash - colon - 1));
        ref.end = std::stoi(span_id.substr(dash + 1));
    } catch (const std::exception&) {
        throw InputError("malformed span id: " + span_id);
    }
    return ref;
}

const Section* Document::find_section(const std::string& section_id) const {
    for (const auto& s : sections)
        if (s.section_id == section_id)
            return &s;
    return nullptr;
}

int Document::section_index(const std::string& section_id) const {
    for (std::size_t i = 0; i < sections.size(); ++i)
        if (sections[i].section_id == section_id)
            return static_cast<int>(i);
    return -1;
}

const Document* Corpus::find_document(const std::string& doc_id) const {
    for (const auto& d : documents)
        if (d.doc_id == doc_id)
            return &d;
    return nullptr;
}

bool Corpus::has_token(const std::string& token) const {
    std::string needle = lowercase(token);
    auto contains = [&](const std::string& text) {
        auto toks = alnum_tokens(text);
        return std::find(toks.begin(), toks.end(), needle) != toks.end();
    };
    if (contains(corpus_id))
        return true;
    for (const auto& d : documents) {
        if (contains(d.doc_id) || contains(d.title))
            return true;
        for (const auto& s : d.sections)
            if (contains(s.section_id) || contains(s.heading) || contains(s.body))
                return true;
        for (const auto& img : d.images) {
            if (contains(img.image_id) || contains(img.uri))
                return true;
            if (img.caption && contains(*img.caption))
                return true;
        }
    }
    return false;
}

namespace {

const json& require_field(const json& obj, const char* field, const std::string& where) {
    auto it = obj.find(field);
    if (it == obj.end())
        throw InputError("schema violation: missing field \"" + std::string(field) + "\" in " + where);
    return *it;
}

std::string require_string(const json& obj, const char* field, const std::string& where) {
    const json& v = require_field(obj, field, where);
    if (!v.is_string())
        throw InputError("schema violation: field \"" + std::string(field) + "\" in " + where +
                         " must be a string");
    return v.get<std::string>();
}

} // namespace

Corpus parse_corpus_json(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InputError(std::string("corpus is not valid JSON: ") + e.what());
    }
    if (!root.is_object())
        throw InputError("schema violation: corpus root must be an object");

    Corpus corpus;
    corpus.corpus_id = require_string(root, "corpus_id", "corpus");
    const json& docs = require_field(root, "documents", "corpus");
    if (!docs.is_array())
        throw InputError("schema violation: field \"documents\" must be an array");

    std::set<std::string> doc_ids;
    for (const auto& jd : docs) {
        Document doc;
        doc.doc_id = require_string(jd, "doc_id", "document");
        if (!doc_ids.insert(doc.doc_id).second)
            throw InputError("duplicate id: document \"" + doc.doc_id + "\"");
        doc.title = require_string(jd, "title", "document " + doc.doc_id);

        const json& sections = require_field(jd, "sections", "document " + doc.doc_id);
        if (!sections.is_array())
            throw InputError("schema violation: field \"sections\" in document " + doc.doc_id +
                             " must be an array");
        std::set<std::string> section_ids;
        for (const auto& js : sections) {
            Section s;
            s.section_id = require_string(js, "section_id", "section of " + doc.doc_id);
            if (!section_ids.insert(s.section_id).second)
                throw InputError("duplicate id: section \"" + s.section_id + "\" in document " +
                                 doc.doc_id);
            s.heading = require_string(js, "heading", "section " + s.section_id);
            s.body = require_string(js, "body", "section " + s.section_id);
            doc.sections.push_back(std::move(s));
        }

        const json& images = require_field(jd, "images", "document " + doc.doc_id);
        if (!images.is_array())
            throw InputError("schema violation: field \"images\" in document " + doc.doc_id +
                             " must be an array");
        std::set<std::string> image_ids;
        for (const auto& ji : images) {
            ImageAsset img;
            img.image_id = require_string(ji, "image_id", "image of " + doc.doc_id);
            if (!image_ids.insert(img.image_id).second)
                throw InputError("duplicate id: image \"" + img.image_id + "\" in document " +
                                 doc.doc_id);
            img.uri = require_string(ji, "uri", "image " + img.image_id);
            const json& cap = require_field(ji, "caption", "image " + img.image_id);
            if (cap.is_string())
                img.caption = cap.get<std::string>();
            else if (!cap.is_null())
                throw InputError("schema violation: field \"caption\" in image " + img.image_id +
                                 " must be a string or null");
            img.section_id = require_string(ji, "section_id", "image " + img.image_id);
            auto pit = ji.find("page_index");
            if (pit != ji.end() && !pit->is_null()) {
                if (!pit->is_number_integer())
                    throw InputError("schema violation: field \"page_index\" in image " +
                                     img.image_id + " must be an integer or null");
                img.page_index = pit->get<int>();
            }
            doc.images.push_back(std::move(img));
        }

        // Referential checks.
        for (const auto& img : doc.images)
            if (!doc.find_section(img.section_id))
                throw InputError("dangling section reference: image \"" + img.image_id +
                                 "\" refers to missing section \"" + img.section_id + "\"");
        // A section must carry text or at least one image.
        for (const auto& s : doc.sections) {
            if (!s.body.empty())
                continue;
            bool has_image = std::any_of(doc.images.begin(), doc.images.end(),
                                         [&](const ImageAsset& i) { return i.section_id == s.section_id; });
            if (!has_image)
                throw InputError("schema violation: section \"" + s.section_id + "\" in document " +
                                 doc.doc_id + " has empty body and no images");
        }
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open corpus file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_corpus_json(buf.str());
}

std::string corpus_to_json(const Corpus& corpus) {
    ordered_json root;
    root["corpus_id"] = corpus.corpus_id;
    root["documents"] = ordered_json::array();
    for (const auto& d : corpus.documents) {
        ordered_json jd;
        jd["doc_id"] = d.doc_id;
        jd["title"] = d.title;
        jd["sections"] = ordered_json::array();
        for (const auto& s : d.sections) {
            ordered_json js;
            js["section_id"] = s.section_id;
            js["heading"] = s.heading;
            js["body"] = s.body;
            jd["sections"].push_back(std::move(js));
        }
        jd["images"] = ordered_json::array();
        for (const auto& img : d.images) {
            ordered_json ji;
            ji["image_id"] = img.image_id;
            ji["uri"] = img.uri;
            if (img.caption)
                ji["caption"] = *img.caption;
            else
                ji["caption"] = nullptr;
            ji["section_id"] = img.section_id;
            if (img.page_index)
                ji["page_index"] = *img.page_index;
            else
                ji["page_index"] = nullptr;
            jd["images"].push_back(std::move(ji));
        }
        root["documents"].push_back(std::move(jd));
    }
    return root.dump(2) + "\n";
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write corpus file: " + path);
    out << corpus_to_json(corpus);
}

Document paginate(const Document& document, int triplets_per_page,
                  const std::vector<Triplet>& triplets) {
    if (triplets_per_page < 1)
        throw InputError("triplets_per_page must be >= 1");

    struct SpanEntry {
        SpanRef ref;
        int section_idx;
        int triplet_count = 0;
    };
    std::map<std::string, SpanEntry> spans; // span_id -> entry
    for (const auto& t : triplets) {
        if (t.doc_id != document.doc_id)
            throw InputError("triplet does not belong to document " + document.doc_id +
                             " (got doc \"" + t.doc_id + "\")");
        SpanRef ref = SpanRef::parse(t.span_id);
        int idx = document.section_index(ref.section_id);
        if (idx < 0)
            throw InputError("triplet span refers to missing section \"" + ref.section_id +
                             "\" in document " + document.doc_id);
        auto [it, inserted] = spans.emplace(t.span_id, SpanEntry{ref, idx, 0});
        it->second.triplet_count++;
    }

    // Document order: section position, then character offset.
    std::vector<std::pair<std::string, SpanEntry>> ordered(spans.begin(), spans.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        const SpanEntry& ea = a.second;
        const SpanEntry& eb = b.second;
        return std::tie(ea.section_idx, ea.ref.begin, ea.ref.end, a.first) <
               std::tie(eb.section_idx, eb.ref.begin, eb.ref.end, b.first);
    });

    Document out = document;
    out.pages.clear();
    std::map<std::string, int> span_page;
    int current_page = 0;
    int current_count = 0;
    std::vector<PageAssignment> pages;
    pages.push_back(PageAssignment{0, {}, {}});
    for (const auto& [span_id, entry] : ordered) {
        if (current_count > 0 && current_count + entry.triplet_count > triplets_per_page) {
            ++current_page;
            current_count = 0;
            pages.push_back(PageAssignment{current_page, {}, {}});
        }
        pages.back().member_span_ids.push_back(span_id);
        span_page[span_id] = current_page;
        current_count += entry.triplet_count;
    }

    // First span page per section, and the page running when a section starts.
    std::map<int, int> first_span_page; // section idx -> page
    std::map<int, int> page_before;     // section idx -> page of last span in earlier sections
    int running = 0;
    std::size_t cursor = 0;
    for (int sec = 0; sec < static_cast<int>(document.sections.size()); ++sec) {
        page_before[sec] = running;
        while (cursor < ordered.size() && ordered[cursor].second.section_idx == sec) {
            if (!first_span_page.count(sec))
                first_span_page[sec] = span_page[ordered[cursor].first];
            running = span_page[ordered[cursor].first];
            ++cursor;
        }
    }

    for (auto& img : out.images) {
        int sec = out.section_index(img.section_id);
        int page = 0;
        if (first_span_page.count(sec))
            page = first_span_page[sec];
        else if (page_before.count(sec))
            page = page_before[sec];
        img.page_index = page;
        pages[static_cast<std::size_t>(page)].member_image_ids.push_back(img.image_id);
    }

    out.pages = std::move(pages);
    return out;
}

std::vector<TextChunk> chunk_text(const Document& document, int chunk_size_words) {
    if (chunk_size_words < 1)
        throw InputError("chunk_size_words must be >= 1");
    std::vector<std::string> words;
    for (const auto& s : document.sections) {
        auto toks = tokenize(s.body);
        words.insert(words.end(), toks.begin(), toks.end());
    }
    std::vector<TextChunk> chunks;
    std::size_t n = words.size();
    std::size_t size = static_cast<std::size_t>(chunk_size_words);
    for (std::size_t start = 0; start < n; start += size) {
        std::size_t end = std::min(start + size, n);
        std::string text;
        for (std::size_t i = start; i < end; ++i) {
            if (!text.empty())
                text.push_back(' ');
            text += words[i];
        }
        TextChunk chunk;
        chunk.chunk_id = document.doc_id + "#c" + std::to_string(chunks.size());
        chunk.doc_id = document.doc_id;
        chunk.word_count = static_cast<int>(end - start);
        chunk.text = std::move(text);
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

} // namespace mmgraph
