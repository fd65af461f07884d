#pragma once

#include "mmgraph/corpus.hpp"
#include "mmgraph/embedding.hpp"
#include "mmgraph/generation.hpp"
#include "mmgraph/retrieval.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mmgraph {

enum class QType { TextImage, ImageText, ImageImage };

std::string to_string(QType qtype);
QType qtype_from_string(const std::string& text);

struct EvalQuestion {
    std::string qid;
    QType qtype = QType::TextImage;
    std::string question;
    std::vector<std::string> choices; // 2-4 lettered options
    std::string answer;               // letter, e.g. "(B)"
    std::optional<std::string> gold_image_id;
    std::optional<std::string> gold_source_text;
    std::string doc_id;
};

// Schema checks: answer letter indexes a choice; text_image/image_text carry
// both gold fields, image_image carries the gold image.
void validate_eval_question(const EvalQuestion& question);

std::vector<EvalQuestion> parse_testset_jsonl(const std::string& text);
std::vector<EvalQuestion> load_testset(const std::string& path);
std::string testset_to_jsonl(const std::vector<EvalQuestion>& questions);
void save_testset(const std::vector<EvalQuestion>& questions, const std::string& path);

struct MatchConfig {
    double f1_threshold = 0.5;
};

struct HitRecord {
    std::string qid;
    QType qtype = QType::TextImage;
    bool hit = false;
    double score = 0.0;       // membership 0/1, or the best token F1
    std::string matched_text; // best-matching retrieved text (image_text only)
};

// text_image/image_image: gold image retrieved. image_text: some retrieved
// triplet source text or linked text reaches the F1 threshold.
HitRecord judge_hit(const EvalQuestion& question, const RetrievedContext& context,
                    const MatchConfig& config = {});

struct RecallReport {
    std::map<std::string, double> recall_by_type;
    std::map<std::string, int> count_by_type;
    double overall = 0.0; // mean of the complex-type recalls present
    double mean_words = 0.0;
    double mean_images = 0.0;
    std::vector<HitRecord> records;
};

RecallReport recall_ratio(const std::vector<HitRecord>& records,
                          const std::vector<RetrievedContext>& contexts);
nlohmann::ordered_json recall_report_to_json(const RecallReport& report);

// First "(X)" or standalone token X with X in A..D, scanning left to right.
std::optional<char> parse_answer_letter(const std::string& raw);

struct QARecord {
    std::string qid;
    std::string predicted; // empty when unparseable
    std::string gold;
    bool correct = false;
    bool flagged = false; // raw answer had no parsable letter
};

struct QAReport {
    double accuracy = 0.0;
    std::vector<QARecord> records;
};

QAReport grade_qa(const std::vector<std::string>& raw_answers,
                  const std::vector<EvalQuestion>& questions);
nlohmann::ordered_json qa_report_to_json(const QAReport& report);

struct NEARecord {
    std::string qid;
    std::string original_question;
    std::string anonymized_question;
    std::string alias;
    std::string original_phrase;
    std::string injected_sentence;
};

struct NEAResult {
    EvalQuestion question;
    Document document;
    NEARecord record;
};

// Replaces every occurrence of the phrase in the question with the alias and
// appends "<alias> is also known as <phrase>." to the gold image's section,
// so extraction later ties alias and phrase into one component.
NEAResult apply_nea(const EvalQuestion& question, const Document& document,
                    const std::string& alias, const std::string& target_phrase);

// Pronounceable uppercase nonsense, e.g. "ZORVEX".
std::string generate_alias(std::mt19937& rng);
// Draws aliases until one has no token anywhere in the corpus.
std::string fresh_alias(std::mt19937& rng, const Corpus& corpus);

using Reviser =
    std::function<std::string(const std::string& question, const std::string& source_text)>;

struct ValidationIteration {
    std::string question;
    double similarity = 0.0;
};

struct ValidationResult {
    bool accepted = false;
    std::vector<ValidationIteration> iterations;
    std::string final_question;
};

// Accept once cosine(question, source) drops below the threshold (strict);
// otherwise revise and retry up to max_iters total iterations.
ValidationResult validate_question(const std::string& question, const std::string& source_text,
                                   EmbeddingProvider& embedder, double sim_threshold = 0.6,
                                   int max_iters = 1, const Reviser& reviser = nullptr);

struct ParsedQuestion {
    std::string question;
    std::vector<std::string> choices;
    std::string answer;
    std::string used_facts; // empty when the output omits it
};

// Tolerant reader for the generator output format: quoted keys/values with
// single or double quotes, optional braces, lists in brackets, '#' comments.
ParsedQuestion parse_generated_question(const std::string& raw);

std::string load_prompt_template(const std::string& path);
std::string fill_template(const std::string& text, const std::string& placeholder,
                          const std::string& value);

struct QuestionPrompts {
    std::string text_image;
    std::string image_text;
    std::string image_image;
};

// One question per page image; text_image/image_text need a caption for the
// {textual_context} slot and skip captionless images.
std::vector<EvalQuestion> generate_questions(const Document& document, const PageAssignment& page,
                                             QType qtype, LMMClient& client,
                                             const QuestionPrompts& prompts);

} // namespace mmgraph
