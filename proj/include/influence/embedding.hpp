#pragma once

#include <chrono>
#include <cstddef>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "influence/core.hpp"
#include "influence/http_client.hpp"

namespace influence {

struct EmbeddingVector {
    std::vector<double> values;
    /// Set when the provider produced a zero vector and a unit basis vector
    /// was put in its place.
    bool substituted = false;

    std::size_t dim() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

class Embedder {
public:
    virtual ~Embedder() = default;

    /// One vector per text, in input order. Texts must be non-empty.
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string id() const = 0;

    EmbeddingVector embed_one(const std::string& text);
};

/// Hashed bag of tokens: lowercase, split on whitespace, FNV-1a 64 of each
/// token picks a bucket (hash mod d), counts accumulate, then L2 normalize.
/// Token order never matters. A text without tokens maps to the basis vector
/// e_(fnv1a64(text) mod d) and is flagged as substituted.
class MockEmbedder : public Embedder {
public:
    explicit MockEmbedder(std::size_t dimension = 64);

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    std::size_t dimension() const override { return dimension_; }
    std::string id() const override { return "mock-bag-of-tokens-" + std::to_string(dimension_); }

    std::size_t bucket(std::string_view token) const;

private:
    std::size_t dimension_;
};

struct RemoteEmbedderConfig {
    std::string endpoint;
    std::string model;
    std::string api_key;
    RetryPolicy retry;
    std::size_t max_in_flight = 4;
    std::chrono::seconds timeout{60};
    /// 0 = learn from the first reply.
    std::size_t dimension = 0;
};

/// POST {model, input: [...]} -> {data: [{embedding: [...]}, ...]}.
class RemoteEmbedder : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    std::size_t dimension() const override;
    std::string id() const override { return "remote:" + config_.model; }

private:
    RemoteEmbedderConfig config_;
    JsonPoster poster_;
    mutable std::mutex mu_;
    std::size_t dimension_;
};

/// Parses a remote embedding reply and checks it carries `expected` vectors.
std::vector<EmbeddingVector> parse_embedding_reply(const nlohmann::json& reply,
                                                   std::size_t expected);

/// Cosine similarity clamped to [-1, 1]. Throws DomainError on dimension
/// mismatch or a zero-norm input.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine(std::span<const double> a, std::span<const double> b);

/// Symmetric n x n matrix with unit diagonal, entries in [-1, 1].
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    explicit SimilarityMatrix(std::size_t n);

    /// Validates symmetry, the unit diagonal and the [-1, 1] range.
    static SimilarityMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t size() const noexcept { return n_; }
    double at(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
    /// Sets (i, j) and (j, i) together; clamps to [-1, 1].
    void set(std::size_t i, std::size_t j, double value);

    std::vector<std::vector<double>> rows() const;
    bool operator==(const SimilarityMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> entries_;
};

SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> embeddings);
SimilarityMatrix similarity_matrix(std::span<const std::string> texts, Embedder& embedder);
SimilarityMatrix similarity_matrix(const ResponseSet& samples, Embedder& embedder);

}  // namespace influence
