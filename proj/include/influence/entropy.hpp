#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "influence/core.hpp"
#include "influence/embedding.hpp"
#include "influence/llm_gateway.hpp"

namespace influence {

/// Non-negative weights summing to one (within 1e-9).
struct ProbabilityVector {
    std::vector<double> p;

    /// Normalizes non-negative scores. All-zero scores are all equal, so they
    /// normalize to the uniform vector.
    static ProbabilityVector from_scores(std::span<const double> scores);

    bool valid() const;
    /// -sum p log2 p with 0 log 0 = 0, summed in ascending order of p.
    double entropy_bits() const;
};

struct ClusterAssignment {
    std::vector<std::size_t> labels;  // contiguous from 0, in order of first appearance
    double threshold = 0.9;

    std::size_t cluster_count() const;
    std::vector<std::size_t> sizes() const;
    bool operator==(const ClusterAssignment&) const = default;
};

/// Map a cosine similarity onto [0, 1].
inline double to_unit_interval(double cosine) { return (cosine + 1.0) / 2.0; }

/// Per-response score: mean mapped similarity to the other N-1 responses.
std::vector<double> literal_scores(const SimilarityMatrix& sim);

/// Scores -> probabilities -> entropy in bits, straight from the similarity
/// matrix. Reaches its maximum log2 N when every response is identical.
EntropyEstimate literal_semantic_entropy(const SimilarityMatrix& sim);

/// Single-linkage clustering: i and j share a cluster when their mapped
/// similarity is at least `threshold`, closed transitively.
ClusterAssignment cluster_by_similarity(const SimilarityMatrix& sim, double threshold);

/// Entropy of the cluster-size distribution, in bits.
double entropy_from_counts(std::span<const std::size_t> counts);

std::pair<EntropyEstimate, ClusterAssignment> clustered_semantic_entropy(
    const SimilarityMatrix& sim, double threshold);

// ---------------------------------------------------------------------------

struct EntropyConfig {
    Estimator estimator = Estimator::Clustered;
    double cluster_threshold = 0.9;
    DecodingParams decoding;

    void validate() const;
};

struct ContextEvaluation {
    ResponseSet responses;
    EntropyEstimate entropy;
    std::optional<ClusterAssignment> clusters;
};

/// Samples a conditioning context through the gateway and scores it with the
/// configured estimator. Results are cached by context signature, so asking
/// for the same context twice costs one generation.
class EntropyEngine {
public:
    EntropyEngine(Gateway& gateway, Embedder& embedder, EntropyConfig config);

    /// `base_seed` is folded with the query text and the sorted ids of the
    /// documents in context, so a document's seed never depends on its position.
    std::shared_ptr<const ContextEvaluation> evaluate(const Query& query,
                                                      std::span<const Document> docs,
                                                      const ContextSpec& context,
                                                      std::uint64_t base_seed);

    EntropyEstimate conditional_entropy(const Query& query, std::span<const Document> docs,
                                        const ContextSpec& context, std::uint64_t base_seed);

    /// Applies the configured estimator to an already sampled set.
    ContextEvaluation score(ResponseSet responses);

    static std::uint64_t context_seed(std::uint64_t base_seed, const Query& query,
                                      std::span<const Document> docs, const ContextSpec& context);

    Gateway& gateway() noexcept { return gateway_; }
    Embedder& embedder() noexcept { return embedder_; }
    const EntropyConfig& config() const noexcept { return config_; }
    std::size_t cache_size() const;

private:
    Gateway& gateway_;
    Embedder& embedder_;
    EntropyConfig config_;
    mutable std::shared_mutex cache_mu_;
    std::unordered_map<std::string, std::shared_ptr<const ContextEvaluation>> cache_;
};

}  // namespace influence
