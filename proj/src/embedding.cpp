#include "mmgraph/embedding.hpp"

#include "mmgraph/errors.hpp"
#include "mmgraph/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace mmgraph {

using nlohmann::json;

double l2_norm(const EmbeddingVector& v) {
    double sum = 0.0;
    for (double x : v)
        sum += x * x;
    return std::sqrt(sum);
}

void l2_normalize(EmbeddingVector& v) {
    double norm = l2_norm(v);
    if (norm > 0.0)
        for (double& x : v)
            x /= norm;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size())
        throw InputError("cosine: dim mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        dot += a[i] * b[i];
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return dot / (na * nb);
}

std::vector<std::pair<std::string, double>>
top_k_similar(const EmbeddingVector& query,
              const std::vector<std::pair<std::string, EmbeddingVector>>& candidates, int k) {
    if (k < 1)
        throw InputError("top_k_similar: k must be >= 1");
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(candidates.size());
    for (const auto& [id, vec] : candidates)
        scored.emplace_back(id, cosine(query, vec));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > static_cast<std::size_t>(k))
        scored.resize(static_cast<std::size_t>(k));
    return scored;
}

EmbeddingVector EmbeddingProvider::embed_text(const std::string& text) {
    if (text.empty())
        throw InputError("embed_text: text must be non-empty");
    return embed("text", text);
}

EmbeddingVector EmbeddingProvider::embed_image(const std::string& payload) {
    if (payload.empty())
        throw InputError("embed_image: payload must be non-empty");
    return embed("image", payload);
}

EmbeddingVector EmbeddingProvider::embed(const std::string& modality, const std::string& payload) {
    auto key = std::make_pair(modality, content_hash(payload));
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end())
            return it->second;
    }
    EmbeddingVector v = compute(modality, payload);
    double norm = l2_norm(v);
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw ProviderError(identity(), "embedding has zero or non-finite norm");
    for (double& x : v)
        x /= norm;
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.emplace(key, std::move(v));
    return it->second;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double unit_interval(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);
}

} // namespace

TestEmbedder::TestEmbedder(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {
    if (dim < 1)
        throw InputError("TestEmbedder: dim must be >= 1");
}

std::string TestEmbedder::identity() const {
    return "test:seed=" + std::to_string(seed_) + ",dim=" + std::to_string(dim_);
}

EmbeddingVector TestEmbedder::compute(const std::string& modality, const std::string& payload) {
    (void)modality;
    auto tokens = alnum_tokens(payload);
    if (tokens.empty())
        tokens.push_back("");
    // Canonical accumulation order makes identical token bags bitwise-equal.
    std::sort(tokens.begin(), tokens.end());
    EmbeddingVector acc(static_cast<std::size_t>(dim_), 0.0);
    for (const auto& token : tokens) {
        std::uint64_t state = seed_ ^ fnv1a64(token);
        for (int d = 0; d < dim_; ++d)
            acc[static_cast<std::size_t>(d)] += unit_interval(splitmix64(state)) * 2.0 - 1.0;
    }
    if (l2_norm(acc) == 0.0)
        acc[0] = 1.0;
    return acc;
}

RemoteEmbedder::RemoteEmbedder(const std::string& base_url, int timeout_seconds)
    : base_url_(base_url), timeout_seconds_(timeout_seconds) {}

EmbeddingVector RemoteEmbedder::compute(const std::string& modality, const std::string& payload) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    json body = {{"modality", modality}, {"payload", payload}};
    auto res = client.Post("/embed", body.dump(), "application/json");
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
    if (!parsed.contains("vector") || !parsed["vector"].is_array())
        throw ProviderError(identity(), "response missing \"vector\" array");
    EmbeddingVector v;
    try {
        v = parsed["vector"].get<EmbeddingVector>();
    } catch (const json::exception& e) {
        throw ProviderError(identity(), std::string("malformed response: ") + e.what());
    }
    if (dim_ < 0)
        dim_ = static_cast<int>(v.size());
    else if (dim_ != static_cast<int>(v.size()))
        throw ProviderError(identity(), "dim mismatch: expected " + std::to_string(dim_) +
                                            ", got " + std::to_string(v.size()));
    return v;
}

CacheOnlyEmbedder::CacheOnlyEmbedder(const std::string& cache_path) : cache_path_(cache_path) {}

EmbeddingVector CacheOnlyEmbedder::compute(const std::string& modality, const std::string& payload) {
    throw ProviderError(identity(), "cannot embed " + modality + " payload \"" + payload +
                                        "\": not present in cache file");
}

bool EmbeddingStore::contains(const std::string& kind, const std::string& id) const {
    return data_.count(std::make_pair(kind, id)) > 0;
}

const EmbeddingVector& EmbeddingStore::get(const std::string& kind, const std::string& id) const {
    auto it = data_.find(std::make_pair(kind, id));
    if (it == data_.end())
        throw InputError("missing embedding: " + kind + "/" + id);
    return it->second;
}

void EmbeddingStore::put(const std::string& kind, const std::string& id, EmbeddingVector v) {
    if (v.empty())
        throw InputError("embedding store: empty vector for " + kind + "/" + id);
    if (dim_ < 0)
        dim_ = static_cast<int>(v.size());
    else if (dim_ != static_cast<int>(v.size()))
        throw InputError("embedding store: dim mismatch for " + kind + "/" + id + " (store dim " +
                         std::to_string(dim_) + ", vector dim " + std::to_string(v.size()) + ")");
    double norm = l2_norm(v);
    if (norm == 0.0)
        throw InputError("embedding store: zero vector for " + kind + "/" + id);
    for (double& x : v)
        x /= norm;
    data_[std::make_pair(kind, id)] = std::move(v);
}

std::vector<std::pair<std::string, std::string>> EmbeddingStore::keys() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(data_.size());
    for (const auto& [key, value] : data_)
        out.push_back(key);
    return out;
}

std::vector<std::pair<std::string, EmbeddingVector>>
EmbeddingStore::entries(const std::string& kind) const {
    std::vector<std::pair<std::string, EmbeddingVector>> out;
    for (auto it = data_.lower_bound(std::make_pair(kind, std::string()));
         it != data_.end() && it->first.first == kind; ++it)
        out.emplace_back(it->first.second, it->second);
    return out;
}

void EmbeddingStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write embedding store: " + path);
    for (const auto& [key, vec] : data_) {
        json row = json::object();
        row["id"] = key.second;
        row["kind"] = key.first;
        row["dim"] = vec.size();
        row["values"] = vec;
        out << row.dump() << "\n";
    }
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open embedding store: " + path);
    EmbeddingStore store;
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
            throw InputError("embedding store line " + std::to_string(lineno) +
                             " is not valid JSON: " + e.what());
        }
        if (!row.contains("id") || !row.contains("kind") || !row.contains("values"))
            throw InputError("embedding store line " + std::to_string(lineno) +
                             ": schema violation: missing field id/kind/values");
        auto vec = row["values"].get<EmbeddingVector>();
        if (row.contains("dim") && row["dim"].get<std::size_t>() != vec.size())
            throw InputError("embedding store line " + std::to_string(lineno) +
                             ": dim does not match values length");
        store.put(row["kind"].get<std::string>(), row["id"].get<std::string>(), std::move(vec));
    }
    return store;
}

EmbeddingVector lookup_or_embed(const EmbeddingStore& store, EmbeddingProvider& provider,
                                const std::string& kind, const std::string& id,
                                const std::string& modality, const std::string& payload) {
    if (store.contains(kind, id))
        return store.get(kind, id);
    if (modality == "image")
        return provider.embed_image(payload);
    return provider.embed_text(payload);
}

} // namespace mmgraph
