#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmgraph {

// A word is a maximal run of non-whitespace characters. This definition is
// shared by the chunker and the retrieved-words metric.
std::vector<std::string> tokenize(std::string_view text);
std::size_t word_count(std::string_view text);

// Lowercased tokens split on non-alphanumeric runs. Used by the test
// embedder and corpus token-membership checks.
std::vector<std::string> alnum_tokens(std::string_view text);

std::string lowercase(std::string_view s);
std::string collapse_whitespace(std::string_view s);

// Strips leading/trailing punctuation (non-alphanumeric, non-space).
std::string trim_punct(std::string_view s);

// Canonical entity/relation form: case-folded, whitespace-collapsed,
// punctuation trimmed from each token edge. Idempotent.
std::string normalize_text(std::string_view surface);

// Sentence ranges [begin, end) over text, split after [.!?]+ followed by
// whitespace. Text without terminal punctuation is one sentence.
std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text);

uint64_t fnv1a64(std::string_view data);
std::string content_hash(std::string_view data); // 16 hex chars of fnv1a64

// Token-level F1 between two strings, lowercased whitespace tokens with
// edge punctuation trimmed, multiset overlap.
double token_f1(std::string_view a, std::string_view b);

// Fixed 6-decimal rendering used everywhere a score is serialized.
std::string format_score(double value);

} // namespace mmgraph
