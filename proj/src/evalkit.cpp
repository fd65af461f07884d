#include "mmgraph/evalkit.hpp"

#include "mmgraph/errors.hpp"
#include "mmgraph/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace mmgraph {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json score_json(double value) {
    return ordered_json::parse(format_score(value));
}

std::string truncate_raw(const std::string& raw) {
    if (raw.size() <= 160)
        return raw;
    return raw.substr(0, 160) + "...";
}

} // namespace

std::string to_string(QType qtype) {
    switch (qtype) {
    case QType::TextImage: return "text_image";
    case QType::ImageText: return "image_text";
    case QType::ImageImage: return "image_image";
    }
    throw InputError("unknown qtype");
}

QType qtype_from_string(const std::string& text) {
    if (text == "text_image")
        return QType::TextImage;
    if (text == "image_text")
        return QType::ImageText;
    if (text == "image_image")
        return QType::ImageImage;
    throw InputError("unknown qtype: " + text);
}

void validate_eval_question(const EvalQuestion& q) {
    if (q.qid.empty())
        throw InputError("question needs a qid");
    if (q.question.empty())
        throw InputError(q.qid + ": empty question text");
    if (q.doc_id.empty())
        throw InputError(q.qid + ": missing doc_id");
    if (q.choices.size() < 2 || q.choices.size() > 4)
        throw InputError(q.qid + ": needs 2-4 choices, got " + std::to_string(q.choices.size()));
    auto letter = parse_answer_letter(q.answer);
    if (!letter)
        throw InputError(q.qid + ": answer \"" + q.answer + "\" has no letter A-D");
    if (static_cast<std::size_t>(*letter - 'A') >= q.choices.size())
        throw InputError(q.qid + ": answer " + q.answer + " is outside the choices");
    if (!q.gold_image_id || q.gold_image_id->empty())
        throw InputError(q.qid + ": missing gold_image_id");
    if (q.qtype != QType::ImageImage && (!q.gold_source_text || q.gold_source_text->empty()))
        throw InputError(q.qid + ": " + to_string(q.qtype) + " needs gold_source_text");
}

std::vector<EvalQuestion> parse_testset_jsonl(const std::string& text) {
    std::vector<EvalQuestion> questions;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw InputError("testset line " + std::to_string(lineno) + " is not valid JSON: " +
                             e.what());
        }
        EvalQuestion q;
        try {
            q.qid = row.at("qid").get<std::string>();
            q.qtype = qtype_from_string(row.at("qtype").get<std::string>());
            q.question = row.at("question").get<std::string>();
            q.choices = row.at("choices").get<std::vector<std::string>>();
            q.answer = row.at("answer").get<std::string>();
            if (row.contains("gold_image_id") && !row["gold_image_id"].is_null())
                q.gold_image_id = row["gold_image_id"].get<std::string>();
            if (row.contains("gold_source_text") && !row["gold_source_text"].is_null())
                q.gold_source_text = row["gold_source_text"].get<std::string>();
            q.doc_id = row.at("doc_id").get<std::string>();
        } catch (const json::exception& e) {
            throw InputError("testset line " + std::to_string(lineno) + ": " + e.what());
        }
        validate_eval_question(q);
        questions.push_back(std::move(q));
    }
    return questions;
}

std::vector<EvalQuestion> load_testset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open testset: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_testset_jsonl(buf.str());
}

std::string testset_to_jsonl(const std::vector<EvalQuestion>& questions) {
    std::string out;
    for (const auto& q : questions) {
        ordered_json row;
        row["qid"] = q.qid;
        row["qtype"] = to_string(q.qtype);
        row["question"] = q.question;
        row["choices"] = q.choices;
        row["answer"] = q.answer;
        row["gold_image_id"] = q.gold_image_id ? ordered_json(*q.gold_image_id) : nullptr;
        row["gold_source_text"] = q.gold_source_text ? ordered_json(*q.gold_source_text) : nullptr;
        row["doc_id"] = q.doc_id;
        out += row.dump();
        out += "\n";
    }
    return out;
}

void save_testset(const std::vector<EvalQuestion>& questions, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write testset: " + path);
    out << testset_to_jsonl(questions);
}

HitRecord judge_hit(const EvalQuestion& question, const RetrievedContext& context,
                    const MatchConfig& config) {
    HitRecord record;
    record.qid = question.qid;
    record.qtype = question.qtype;

    if (question.qtype == QType::TextImage || question.qtype == QType::ImageImage) {
        if (!question.gold_image_id)
            throw InputError(question.qid + ": judging needs gold_image_id");
        for (const auto& hit : context.images)
            if (hit.image_id == *question.gold_image_id) {
                record.hit = true;
                break;
            }
        record.score = record.hit ? 1.0 : 0.0;
        return record;
    }

    if (!question.gold_source_text)
        throw InputError(question.qid + ": judging needs gold_source_text");
    const std::string& gold = *question.gold_source_text;
    double best = 0.0;
    std::string best_text;
    auto consider = [&](const std::string& text) {
        double f1 = token_f1(gold, text);
        if (f1 > best) {
            best = f1;
            best_text = text;
        }
    };
    for (const auto& t : context.triplets)
        consider(t.source_text);
    for (const auto& lt : context.linked_texts)
        consider(lt.text);
    record.score = best;
    record.matched_text = best_text;
    record.hit = best >= config.f1_threshold;
    return record;
}

RecallReport recall_ratio(const std::vector<HitRecord>& records,
                          const std::vector<RetrievedContext>& contexts) {
    if (records.empty())
        throw InputError("recall_ratio needs at least one record");
    if (records.size() != contexts.size())
        throw InputError("records and contexts must pair up");

    RecallReport report;
    report.records = records;
    std::map<std::string, int> hits;
    for (const auto& r : records) {
        const std::string type = to_string(r.qtype);
        report.count_by_type[type] += 1;
        if (r.hit)
            hits[type] += 1;
    }
    for (const auto& [type, count] : report.count_by_type)
        report.recall_by_type[type] = static_cast<double>(hits[type]) / count;

    double complex_sum = 0.0;
    int complex_types = 0;
    for (const std::string type : {"text_image", "image_text"})
        if (report.recall_by_type.count(type)) {
            complex_sum += report.recall_by_type.at(type);
            ++complex_types;
        }
    report.overall = complex_types ? complex_sum / complex_types : 0.0;

    double words = 0.0, images = 0.0;
    for (const auto& ctx : contexts) {
        words += ctx.word_count();
        images += static_cast<double>(ctx.images.size());
    }
    report.mean_words = words / static_cast<double>(contexts.size());
    report.mean_images = images / static_cast<double>(contexts.size());
    return report;
}

nlohmann::ordered_json recall_report_to_json(const RecallReport& report) {
    ordered_json j;
    j["recall_by_type"] = ordered_json::object();
    for (const auto& [type, recall] : report.recall_by_type)
        j["recall_by_type"][type] = score_json(recall);
    j["count_by_type"] = report.count_by_type;
    j["overall"] = score_json(report.overall);
    j["mean_words"] = score_json(report.mean_words);
    j["mean_images"] = score_json(report.mean_images);
    j["questions"] = ordered_json::array();
    for (const auto& r : report.records) {
        ordered_json row;
        row["qid"] = r.qid;
        row["qtype"] = to_string(r.qtype);
        row["hit"] = r.hit;
        row["score"] = score_json(r.score);
        if (!r.matched_text.empty())
            row["matched_text"] = r.matched_text;
        j["questions"].push_back(std::move(row));
    }
    return j;
}

std::optional<char> parse_answer_letter(const std::string& raw) {
    for (const auto& token : tokenize(raw)) {
        for (std::size_t i = 0; i + 2 < token.size(); ++i)
            if (token[i] == '(' && token[i + 1] >= 'A' && token[i + 1] <= 'D' &&
                token[i + 2] == ')')
                return token[i + 1];
        std::string core = trim_punct(token);
        if (core.size() == 1 && core[0] >= 'A' && core[0] <= 'D')
            return core[0];
    }
    return std::nullopt;
}

QAReport grade_qa(const std::vector<std::string>& raw_answers,
                  const std::vector<EvalQuestion>& questions) {
    if (raw_answers.size() != questions.size())
        throw InputError("one raw answer per question required");
    QAReport report;
    int correct = 0;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        QARecord record;
        record.qid = questions[i].qid;
        auto gold = parse_answer_letter(questions[i].answer);
        record.gold = gold ? std::string(1, *gold) : "";
        auto predicted = parse_answer_letter(raw_answers[i]);
        if (predicted) {
            record.predicted = std::string(1, *predicted);
            record.correct = gold && *predicted == *gold;
        } else {
            record.flagged = true;
        }
        correct += record.correct ? 1 : 0;
        report.records.push_back(std::move(record));
    }
    report.accuracy =
        questions.empty() ? 0.0 : static_cast<double>(correct) / questions.size();
    return report;
}

nlohmann::ordered_json qa_report_to_json(const QAReport& report) {
    ordered_json j;
    j["accuracy"] = score_json(report.accuracy);
    j["questions"] = ordered_json::array();
    for (const auto& r : report.records) {
        ordered_json row;
        row["qid"] = r.qid;
        row["predicted"] = r.predicted;
        row["gold"] = r.gold;
        row["correct"] = r.correct;
        row["flagged"] = r.flagged;
        j["questions"].push_back(std::move(row));
    }
    return j;
}

NEAResult apply_nea(const EvalQuestion& question, const Document& document,
                    const std::string& alias, const std::string& target_phrase) {
    if (alias.empty() || target_phrase.empty())
        throw InputError("alias and target phrase must be non-empty");
    if (question.question.find(target_phrase) == std::string::npos)
        throw InputError(question.qid + ": target phrase \"" + target_phrase +
                         "\" not found in question");
    if (!question.gold_image_id)
        throw InputError(question.qid + ": NEA needs gold_image_id");

    Corpus probe;
    probe.documents.push_back(document);
    for (const auto& token : alnum_tokens(alias))
        if (probe.has_token(token))
            throw InputError("alias \"" + alias + "\" collides with document token \"" + token +
                             "\"");

    std::string anonymized = question.question;
    std::size_t pos = 0;
    while ((pos = anonymized.find(target_phrase, pos)) != std::string::npos) {
        anonymized.replace(pos, target_phrase.size(), alias);
        pos += alias.size();
    }
    if (anonymized.find(target_phrase) != std::string::npos)
        throw InputError("phrase replacement left an occurrence behind");

    const std::string sentence = alias + " is also known as " + target_phrase + ".";

    NEAResult result;
    result.document = document;
    const ImageAsset* image = nullptr;
    for (const auto& img : result.document.images)
        if (img.image_id == *question.gold_image_id)
            image = &img;
    if (!image)
        throw InputError(question.qid + ": gold image " + *question.gold_image_id +
                         " is not in document " + document.doc_id);
    Section* section = nullptr;
    for (auto& s : result.document.sections)
        if (s.section_id == image->section_id)
            section = &s;
    if (!section)
        throw InputError("image section " + image->section_id + " missing from document");
    if (section->body.empty())
        section->body = sentence;
    else
        section->body += " " + sentence;

    result.question = question;
    result.question.question = anonymized;
    result.record = {question.qid, question.question, anonymized,
                     alias,        target_phrase,     sentence};
    return result;
}

std::string generate_alias(std::mt19937& rng) {
    static const char* onsets = "BDFGKLMNPRSTVZ";
    static const char* vowels = "AEIOU";
    std::uniform_int_distribution<int> onset_pick(0, 13);
    std::uniform_int_distribution<int> vowel_pick(0, 4);
    std::uniform_int_distribution<int> syllables(2, 3);
    std::string alias;
    int n = syllables(rng);
    for (int i = 0; i < n; ++i) {
        alias += onsets[onset_pick(rng)];
        alias += vowels[vowel_pick(rng)];
    }
    alias += onsets[onset_pick(rng)];
    return alias;
}

std::string fresh_alias(std::mt19937& rng, const Corpus& corpus) {
    // A handful of generatable real words stay off-limits regardless of the
    // corpus content.
    static const std::set<std::string> blocked = {"salad", "robot", "melon", "seven", "paper",
                                                  "radar", "sonar", "meter", "tiger", "pilot"};
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::string alias = generate_alias(rng);
        std::string lowered = lowercase(alias);
        if (blocked.count(lowered) || corpus.has_token(lowered))
            continue;
        return alias;
    }
    throw InputError("could not generate a corpus-free alias");
}

ValidationResult validate_question(const std::string& question, const std::string& source_text,
                                   EmbeddingProvider& embedder, double sim_threshold,
                                   int max_iters, const Reviser& reviser) {
    if (max_iters < 1)
        throw InputError("max_iters must be >= 1");
    ValidationResult result;
    std::string current = question;
    for (int iter = 0; iter < max_iters; ++iter) {
        double sim = cosine(embedder.embed_text(current), embedder.embed_text(source_text));
        result.iterations.push_back({current, sim});
        if (sim < sim_threshold) {
            result.accepted = true;
            break;
        }
        if (!reviser || iter + 1 == max_iters)
            break;
        current = reviser(current, source_text);
    }
    result.final_question = current;
    return result;
}

namespace {

// Reader for the generator's pseudo-JSON: 'key': value pairs, values quoted
// scalars or bracketed lists, optional braces and '#' comment tails.
struct PseudoReader {
    const std::string& s;
    std::size_t i = 0;

    bool done() const { return i >= s.size(); }
    char peek() const { return s[i]; }

    void skip_filler() {
        while (i < s.size()) {
            char c = s[i];
            if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '{' || c == '}') {
                ++i;
                continue;
            }
            if (c == '#') {
                while (i < s.size() && s[i] != '\n')
                    ++i;
                continue;
            }
            break;
        }
    }

    void skip_inline() {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
    }

    bool at_quote() const { return i < s.size() && (s[i] == '\'' || s[i] == '"'); }

    std::string read_quoted() {
        char quote = s[i++];
        std::string out;
        while (i < s.size()) {
            char c = s[i++];
            if (c == '\\' && i < s.size()) {
                out += s[i++];
                continue;
            }
            if (c == quote)
                return out;
            out += c;
        }
        throw InputError("unterminated string in generated output");
    }

    std::string read_bare_until(const std::string& stops) {
        std::string out;
        while (i < s.size() && stops.find(s[i]) == std::string::npos)
            out += s[i++];
        return collapse_whitespace(out);
    }
};

} // namespace

ParsedQuestion parse_generated_question(const std::string& raw) {
    PseudoReader reader{raw};
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::string>> lists;

    while (true) {
        reader.skip_filler();
        if (reader.done())
            break;
        std::string key;
        if (reader.at_quote()) {
            key = reader.read_quoted();
        } else {
            key = reader.read_bare_until(":\n");
            if (reader.done() || reader.peek() == '\n')
                continue; // prose line without a value
        }
        reader.skip_inline();
        if (reader.done() || reader.peek() != ':')
            continue; // stray string, not a key
        ++reader.i;
        // The value must start on the colon's line; prose headers ending in a
        // colon then leave the next line free to parse as a key.
        reader.skip_inline();
        key = lowercase(collapse_whitespace(key));
        if (reader.done())
            break;
        if (reader.peek() == '\n')
            continue;
        if (reader.peek() == '[') {
            ++reader.i;
            std::vector<std::string> items;
            while (true) {
                reader.skip_filler();
                if (reader.done())
                    throw InputError("unterminated list in generated output");
                if (reader.peek() == ']') {
                    ++reader.i;
                    break;
                }
                if (reader.at_quote())
                    items.push_back(reader.read_quoted());
                else {
                    std::string item = reader.read_bare_until(",]\n");
                    if (!item.empty())
                        items.push_back(item);
                }
            }
            lists[key] = std::move(items);
        } else if (reader.at_quote()) {
            scalars[key] = reader.read_quoted();
        } else {
            std::string value = reader.read_bare_until(",}\n");
            if (!value.empty())
                scalars[key] = value;
        }
    }

    ParsedQuestion parsed;
    auto require_scalar = [&](const std::string& key) {
        auto it = scalars.find(key);
        if (it == scalars.end() || it->second.empty())
            throw InputError("generated output missing \"" + key + "\"; raw: " +
                             truncate_raw(raw));
        return it->second;
    };
    parsed.question = require_scalar("question");
    auto choice_list = lists.find("choices");
    if (choice_list == lists.end() || choice_list->second.empty())
        throw InputError("generated output missing \"choices\"; raw: " + truncate_raw(raw));
    parsed.choices = choice_list->second;
    parsed.answer = require_scalar("answer");
    if (scalars.count("used textual facts"))
        parsed.used_facts = scalars.at("used textual facts");
    return parsed;
}

std::string load_prompt_template(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open prompt template: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fill_template(const std::string& text, const std::string& placeholder,
                          const std::string& value) {
    std::string out = text;
    std::size_t pos = 0;
    while ((pos = out.find(placeholder, pos)) != std::string::npos) {
        out.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return out;
}

std::vector<EvalQuestion> generate_questions(const Document& document, const PageAssignment& page,
                                             QType qtype, LMMClient& client,
                                             const QuestionPrompts& prompts) {
    const std::string& tmpl = qtype == QType::TextImage  ? prompts.text_image
                              : qtype == QType::ImageText ? prompts.image_text
                                                          : prompts.image_image;
    if (tmpl.empty())
        throw InputError("empty prompt template for " + to_string(qtype));

    std::vector<EvalQuestion> out;
    for (const auto& image_id : page.member_image_ids) {
        const ImageAsset* image = nullptr;
        for (const auto& img : document.images)
            if (img.image_id == image_id)
                image = &img;
        if (!image)
            throw InputError("page references unknown image " + image_id);
        if (qtype != QType::ImageImage && (!image->caption || image->caption->empty()))
            continue;

        Prompt prompt;
        prompt.system = qtype == QType::ImageImage
                            ? tmpl
                            : fill_template(tmpl, "{textual_context}", *image->caption);
        prompt.images = {image_id};
        prompt.question = "Generate one question now using the output format above.";
        ParsedQuestion parsed = parse_generated_question(client.generate(prompt));

        EvalQuestion q;
        q.qid = document.doc_id + "#p" + std::to_string(page.page_index) + "#" + image_id + "#" +
                to_string(qtype);
        q.qtype = qtype;
        q.question = parsed.question;
        q.choices = parsed.choices;
        q.answer = parsed.answer;
        q.gold_image_id = image_id;
        if (qtype != QType::ImageImage)
            q.gold_source_text = parsed.used_facts.empty() ? *image->caption : parsed.used_facts;
        q.doc_id = document.doc_id;
        validate_eval_question(q);
        out.push_back(std::move(q));
    }
    return out;
}

} // namespace mmgraph
