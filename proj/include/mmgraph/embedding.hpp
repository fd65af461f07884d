#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace mmgraph {

using EmbeddingVector = std::vector<double>;

double l2_norm(const EmbeddingVector& v);
void l2_normalize(EmbeddingVector& v);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Descending by score, ties by ascending id, truncated to k.
std::vector<std::pair<std::string, double>>
top_k_similar(const EmbeddingVector& query,
              const std::vector<std::pair<std::string, EmbeddingVector>>& candidates, int k);

// Providers memoize by (modality, payload) hash, so repeated embeddings of the
// same content are bitwise-identical and remote calls happen once. Returned
// vectors are unit-norm.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string identity() const = 0;
    EmbeddingVector embed_text(const std::string& text);
    EmbeddingVector embed_image(const std::string& payload);

protected:
    virtual EmbeddingVector compute(const std::string& modality, const std::string& payload) = 0;

private:
    EmbeddingVector embed(const std::string& modality, const std::string& payload);
    std::map<std::pair<std::string, std::string>, EmbeddingVector> cache_;
    std::mutex mutex_;
};

// Seeded hash of the token multiset: each token contributes a fixed
// pseudo-random direction, summed then normalized. Identical token bags give
// identical vectors across processes; modality does not perturb tokens, so
// text and image payloads sharing tokens land near each other.
class TestEmbedder : public EmbeddingProvider {
public:
    explicit TestEmbedder(std::uint64_t seed = 17, int dim = 64);
    std::string identity() const override;
    int dim() const { return dim_; }

protected:
    EmbeddingVector compute(const std::string& modality, const std::string& payload) override;

private:
    std::uint64_t seed_;
    int dim_;
};

// HTTP provider: POST <base>/embed {"modality","payload"} -> {"vector":[...]}.
// Dimension is latched from the first response; later mismatches fail.
class RemoteEmbedder : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(const std::string& base_url, int timeout_seconds = 30);
    std::string identity() const override { return "remote:" + base_url_; }

protected:
    EmbeddingVector compute(const std::string& modality, const std::string& payload) override;

private:
    std::string base_url_;
    int timeout_seconds_;
    int dim_ = -1;
};

// Serves only what a preloaded store already holds; any compute is an error.
// Pairs with `lookup_or_embed` for fully offline cache-file runs.
class CacheOnlyEmbedder : public EmbeddingProvider {
public:
    explicit CacheOnlyEmbedder(const std::string& cache_path);
    std::string identity() const override { return "cache:" + cache_path_; }

protected:
    EmbeddingVector compute(const std::string& modality, const std::string& payload) override;

private:
    std::string cache_path_;
};

// (kind, id) -> unit vector. Kinds in use: node, image, chunk, query-entity,
// edge. JSONL rows {id, kind, dim, values[]}, stored post-normalization.
class EmbeddingStore {
public:
    void set_provider_identity(std::string identity) { provider_identity_ = std::move(identity); }
    const std::string& provider_identity() const { return provider_identity_; }
    int dim() const { return dim_; }
    std::size_t size() const { return data_.size(); }
    bool contains(const std::string& kind, const std::string& id) const;
    const EmbeddingVector& get(const std::string& kind, const std::string& id) const;
    void put(const std::string& kind, const std::string& id, EmbeddingVector v);
    std::vector<std::pair<std::string, std::string>> keys() const;
    // All entries of one kind as (id, vector) candidates, id-ordered.
    std::vector<std::pair<std::string, EmbeddingVector>> entries(const std::string& kind) const;
    void save(const std::string& path) const;
    static EmbeddingStore load(const std::string& path);

private:
    std::map<std::pair<std::string, std::string>, EmbeddingVector> data_;
    std::string provider_identity_;
    int dim_ = -1;
};

// Store hit wins; otherwise the provider computes. Never writes the store, so
// concurrent queries stay read-only over shared state.
EmbeddingVector lookup_or_embed(const EmbeddingStore& store, EmbeddingProvider& provider,
                                const std::string& kind, const std::string& id,
                                const std::string& modality, const std::string& payload);

} // namespace mmgraph
