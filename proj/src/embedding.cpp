#include "influence/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "influence/rng.hpp"

namespace influence {

EmbeddingVector Embedder::embed_one(const std::string& text) {
    std::vector<std::string> one{text};
    auto out = embed(one);
    return std::move(out.front());
}

// ---------------------------------------------------------------------------

MockEmbedder::MockEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw DomainError("embedding dimension must be positive");
}

std::size_t MockEmbedder::bucket(std::string_view token) const {
    return static_cast<std::size_t>(fnv1a64(token) % dimension_);
}

std::vector<EmbeddingVector> MockEmbedder::embed(std::span<const std::string> texts) {
    if (texts.empty()) throw DomainError("embed needs at least one text");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (text.empty()) throw DomainError("cannot embed an empty text");
        std::string lowered(text);
        std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

        EmbeddingVector v;
        v.values.assign(dimension_, 0.0);
        std::istringstream tokens(lowered);
        std::string token;
        while (tokens >> token) v.values[bucket(token)] += 1.0;

        double norm = 0.0;
        for (double x : v.values) norm += x * x;
        if (norm == 0.0) {
            v.values[static_cast<std::size_t>(fnv1a64(text) % dimension_)] = 1.0;
            v.substituted = true;
        } else {
            norm = std::sqrt(norm);
            for (double& x : v.values) x /= norm;
        }
        out.push_back(std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<EmbeddingVector> parse_embedding_reply(const nlohmann::json& reply,
                                                   std::size_t expected) {
    if (!reply.is_object() || !reply.contains("data") || !reply["data"].is_array()) {
        throw ProtocolError("embedding reply has no data array", reply.dump());
    }
    const auto& data = reply["data"];
    if (data.size() != expected) {
        throw ProtocolError("embedding reply has " + std::to_string(data.size()) +
                                " vectors, expected " + std::to_string(expected),
                            reply.dump());
    }
    std::vector<EmbeddingVector> out;
    out.reserve(expected);
    for (const auto& item : data) {
        if (!item.is_object() || !item.contains("embedding") || !item["embedding"].is_array()) {
            throw ProtocolError("embedding entry lacks an embedding array", reply.dump());
        }
        EmbeddingVector v;
        for (const auto& x : item["embedding"]) {
            if (!x.is_number()) throw ProtocolError("non-numeric embedding component", reply.dump());
            const double value = x.get<double>();
            if (!std::isfinite(value)) {
                throw ProtocolError("non-finite embedding component", reply.dump());
            }
            v.values.push_back(value);
        }
        if (v.values.empty()) throw ProtocolError("empty embedding vector", reply.dump());
        out.push_back(std::move(v));
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)),
      poster_(config_.endpoint, config_.api_key, config_.retry, config_.max_in_flight,
              config_.timeout),
      dimension_(config_.dimension) {}

std::size_t RemoteEmbedder::dimension() const {
    std::lock_guard lock(mu_);
    return dimension_;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts) {
    if (texts.empty()) throw DomainError("embed needs at least one text");
    for (const auto& t : texts) {
        if (t.empty()) throw DomainError("cannot embed an empty text");
    }
    const nlohmann::json body = {{"model", config_.model},
                                 {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    const auto reply = poster_.post(body);
    auto vectors = parse_embedding_reply(reply, texts.size());

    std::lock_guard lock(mu_);
    for (const auto& v : vectors) {
        if (dimension_ == 0) dimension_ = v.dim();
        if (v.dim() != dimension_) {
            throw ProtocolError("embedding dimension changed from " + std::to_string(dimension_) +
                                    " to " + std::to_string(v.dim()),
                                reply.dump());
        }
    }
    return vectors;
}

// ---------------------------------------------------------------------------

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DomainError("cosine of vectors with dimensions " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw DomainError("cosine of a zero-norm vector");
    if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine(std::span<const double>(a.values), std::span<const double>(b.values));
}

SimilarityMatrix::SimilarityMatrix(std::size_t n) : n_(n), entries_(n * n, 0.0) {
    for (std::size_t i = 0; i < n; ++i) entries_[i * n + i] = 1.0;
}

SimilarityMatrix SimilarityMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t n = rows.size();
    SimilarityMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw DomainError("similarity matrix must be square");
        if (rows[i][i] != 1.0) throw DomainError("similarity matrix diagonal must be 1");
        for (std::size_t j = 0; j < n; ++j) {
            const double v = rows[i][j];
            if (!(v >= -1.0 && v <= 1.0)) throw DomainError("similarity outside [-1, 1]");
            if (v != rows[j][i]) throw DomainError("similarity matrix must be symmetric");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, rows[i][j]);
    }
    return m;
}

void SimilarityMatrix::set(std::size_t i, std::size_t j, double value) {
    value = std::clamp(value, -1.0, 1.0);
    entries_[i * n_ + j] = value;
    entries_[j * n_ + i] = value;
}

std::vector<std::vector<double>> SimilarityMatrix::rows() const {
    std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) out[i][j] = at(i, j);
    }
    return out;
}

SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> embeddings) {
    SimilarityMatrix m(embeddings.size());
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
            m.set(i, j, cosine(embeddings[i], embeddings[j]));
        }
    }
    return m;
}

SimilarityMatrix similarity_matrix(std::span<const std::string> texts, Embedder& embedder) {
    if (texts.size() < 2) throw DomainError("similarity matrix needs at least 2 samples");

    // Embed each distinct text once; sampled responses repeat a lot.
    std::map<std::string, std::size_t> slot;
    std::vector<std::string> unique;
    for (const auto& t : texts) {
        if (slot.emplace(t, unique.size()).second) unique.push_back(t);
    }
    const auto vectors = embedder.embed(unique);

    std::vector<EmbeddingVector> per_sample;
    per_sample.reserve(texts.size());
    for (const auto& t : texts) per_sample.push_back(vectors[slot.at(t)]);
    return similarity_matrix(per_sample);
}

SimilarityMatrix similarity_matrix(const ResponseSet& samples, Embedder& embedder) {
    return similarity_matrix(samples.texts(), embedder);
}

}  // namespace influence
