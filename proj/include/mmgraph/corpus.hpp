#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mmgraph {

struct Triplet; // extraction.hpp

// Provenance span: character range within one section body.
// Rendered as "<section_id>:<begin>-<end>".
struct SpanRef {
    std::string section_id;
    int begin = 0;
    int end = 0;

    std::string to_id() const;
    static SpanRef parse(const std::string& span_id);
};

struct Section {
    std::string section_id;
    std::string heading;
    std::string body;
};

struct ImageAsset {
    std::string image_id;
    std::string uri;
    std::optional<std::string> caption;
    std::string section_id;
    std::optional<int> page_index;
};

struct PageAssignment {
    int page_index = 0;
    std::vector<std::string> member_span_ids;
    std::vector<std::string> member_image_ids;
};

struct Document {
    std::string doc_id;
    std::string title;
    std::vector<Section> sections;
    std::vector<ImageAsset> images;
    std::vector<PageAssignment> pages; // empty until paginate()

    const Section* find_section(const std::string& section_id) const;
    int section_index(const std::string& section_id) const; // -1 when missing
};

struct Corpus {
    std::string corpus_id;
    std::vector<Document> documents;

    const Document* find_document(const std::string& doc_id) const;
    // True when `token` (lowercased alphanumeric) occurs anywhere in the
    // corpus text: titles, headings, bodies, captions, ids, uris.
    bool has_token(const std::string& token) const;
};

struct TextChunk {
    std::string chunk_id;
    std::string doc_id;
    std::string text;
    int word_count = 0;
};

Corpus parse_corpus_json(const std::string& json_text);
Corpus load_corpus(const std::string& path);
std::string corpus_to_json(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::string& path);

// Greedy page assignment in document order. Each page accommodates the
// source spans of at most `triplets_per_page` triplets; images take the
// page of their enclosing section's first span (see README for the
// sectionless fallback). Returns a copy with pages and image page_index set.
Document paginate(const Document& document, int triplets_per_page,
                  const std::vector<Triplet>& triplets);

// Splits the concatenated section bodies into chunks of exactly
// `chunk_size_words` words (last chunk may be short).
std::vector<TextChunk> chunk_text(const Document& document, int chunk_size_words);

} // namespace mmgraph
