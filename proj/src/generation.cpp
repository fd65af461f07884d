#include "mmgraph/generation.hpp"

#include "mmgraph/errors.hpp"
#include "mmgraph/text.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace mmgraph {

using json = nlohmann::json;

std::string verbalize_triplets(const std::vector<Triplet>& triplets,
                               const std::string& delimiter) {
    std::string out;
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        if (i)
            out += delimiter;
        out += triplets[i].subject + " " + triplets[i].relation + " " + triplets[i].object;
    }
    return out;
}

Prompt build_prompt(const RetrievedContext& context, const std::string& question,
                    const std::vector<std::string>& choices, const GenerationConfig& config) {
    if (question.empty())
        throw InputError("empty question");
    if (config.max_images < 0)
        throw InputError("max_images must be >= 0");
    Prompt p;
    p.system = config.system;
    p.context = verbalize_triplets(context.triplets, config.delimiter);
    for (const auto& lt : context.linked_texts) {
        if (!p.context.empty())
            p.context += config.delimiter;
        p.context += lt.text;
    }
    for (const auto& hit : context.images) {
        if (static_cast<int>(p.images.size()) >= config.max_images)
            break;
        p.images.push_back(hit.image_id);
    }
    p.question = question;
    for (std::size_t i = 0; i < choices.size(); ++i) {
        if (!choices[i].empty() && choices[i][0] == '(')
            p.choices.push_back(choices[i]);
        else
            p.choices.push_back("(" + std::string(1, static_cast<char>('A' + i)) + ") " +
                                choices[i]);
    }
    p.context_word_count = context.word_count();
    return p;
}

std::string render_prompt(const Prompt& prompt) {
    std::string out = prompt.system;
    out += "\n\n";
    if (!prompt.context.empty()) {
        out += "Context: " + prompt.context;
        out += "\n\n";
    }
    if (!prompt.images.empty()) {
        out += "Images:";
        for (const auto& id : prompt.images)
            out += " " + id;
        out += "\n\n";
    }
    out += "Question: " + prompt.question + "\n";
    for (const auto& choice : prompt.choices)
        out += choice + "\n";
    out += prompt.choices.empty() ? "Answer briefly."
                                  : "Answer with the letter of the correct choice.";
    out += "\n";
    return out;
}

std::string prompt_hash(const Prompt& prompt) {
    return content_hash(render_prompt(prompt));
}

std::string EchoLMMClient::generate(const Prompt& prompt) {
    return render_prompt(prompt);
}

FixtureLMMClient::FixtureLMMClient(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open LMM fixture: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string contents = buf.str();
    identity_ = "fixture:" + content_hash(contents);

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
            throw InputError("LMM fixture line " + std::to_string(lineno) +
                             " is not valid JSON: " + e.what());
        }
        if (!row.contains("hash") || !row.contains("text"))
            throw InputError("LMM fixture line " + std::to_string(lineno) +
                             " needs \"hash\" and \"text\" keys");
        responses_[row["hash"].get<std::string>()] = row["text"].get<std::string>();
    }
}

std::string FixtureLMMClient::generate(const Prompt& prompt) {
    const std::string key = prompt_hash(prompt);
    auto it = responses_.find(key);
    if (it == responses_.end())
        throw ProviderError(identity(), "no response for prompt hash " + key);
    return it->second;
}

RemoteLMMClient::RemoteLMMClient(const std::string& base_url, double temperature,
                                 int timeout_seconds)
    : base_url_(base_url), temperature_(temperature), timeout_seconds_(timeout_seconds) {}

std::string RemoteLMMClient::generate(const Prompt& prompt) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    json body = {{"prompt", render_prompt(prompt)},
                 {"images", prompt.images},
                 {"temperature", temperature_}};
    auto res = client.Post("/generate", body.dump(), "application/json");
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
    if (!parsed.contains("text") || !parsed["text"].is_string())
        throw ProviderError(identity(), "response missing \"text\"");
    return parsed["text"].get<std::string>();
}

GenerationRecord generate_answer(const Prompt& prompt, LMMClient& client) {
    return {prompt_hash(prompt), client.generate(prompt)};
}

} // namespace mmgraph
