#pragma once

#include "mmgraph/retrieval.hpp"

#include <map>
#include <string>
#include <vector>

namespace mmgraph {

struct GenerationConfig {
    std::string system =
        "You are a careful assistant. Answer strictly from the provided context and images.";
    std::string delimiter = ". ";
    int max_images = 4;
    double temperature = 0.0;
};

struct Prompt {
    std::string system;
    std::string context; // verbalized triplets then linked texts, delimiter-joined
    std::vector<std::string> images; // image ids in retrieval order, capped
    std::string question;
    std::vector<std::string> choices; // lettered "(A) ..."
    int context_word_count = 0;      // retrieved words only, question excluded
};

// "subject relation object" per triplet, joined by the delimiter, order kept.
std::string verbalize_triplets(const std::vector<Triplet>& triplets, const std::string& delimiter);

Prompt build_prompt(const RetrievedContext& context, const std::string& question,
                    const std::vector<std::string>& choices, const GenerationConfig& config);

// Deterministic plain-text layout; equal prompts render to equal bytes.
std::string render_prompt(const Prompt& prompt);
std::string prompt_hash(const Prompt& prompt);

class LMMClient {
public:
    virtual ~LMMClient() = default;
    virtual std::string identity() const = 0;
    virtual std::string generate(const Prompt& prompt) = 0;
};

// Returns the rendered prompt; useful for smoke tests and offline inspection.
class EchoLMMClient : public LMMClient {
public:
    std::string identity() const override { return "echo"; }
    std::string generate(const Prompt& prompt) override;
};

// Replays canned responses from JSONL rows {"hash": <prompt hash>, "text": ...}.
class FixtureLMMClient : public LMMClient {
public:
    explicit FixtureLMMClient(const std::string& path);
    std::string identity() const override { return identity_; }
    std::string generate(const Prompt& prompt) override;

private:
    std::string identity_;
    std::map<std::string, std::string> responses_;
};

// POST <base>/generate {"prompt","images","temperature"} -> {"text"}.
class RemoteLMMClient : public LMMClient {
public:
    explicit RemoteLMMClient(const std::string& base_url, double temperature = 0.0,
                             int timeout_seconds = 60);
    std::string identity() const override { return "remote:" + base_url_; }
    std::string generate(const Prompt& prompt) override;

private:
    std::string base_url_;
    double temperature_;
    int timeout_seconds_;
};

struct GenerationRecord {
    std::string prompt_hash;
    std::string text;
};

GenerationRecord generate_answer(const Prompt& prompt, LMMClient& client);

} // namespace mmgraph
