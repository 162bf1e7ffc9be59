#pragma once

// Shared domain types. Everything here is an immutable value record and every
// free function is pure.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "influence/errors.hpp"

namespace influence {

struct Query {
    std::string id;
    std::string text;
    std::optional<std::string> gold_answer;
    /// Adversary-chosen wrong answer; only the attack harness reads it.
    std::optional<std::string> incorrect_target;

    bool operator==(const Query&) const = default;
};

enum class Origin { Dataset, Poisoned, Synthetic };

const char* to_string(Origin origin) noexcept;
Origin origin_from_string(const std::string& name);

struct Document {
    std::string id;
    std::string text;
    /// Ground truth for evaluation. The scoring path never reads it.
    Origin origin = Origin::Dataset;
    std::optional<std::vector<double>> embedding;

    bool operator==(const Document&) const = default;
};

struct RetrievedSet {
    std::string query_id;
    std::vector<Document> documents;

    std::size_t k() const noexcept { return documents.size(); }
};

/// Throws DomainError unless k >= 1 and document ids are distinct.
void validate(const RetrievedSet& set);

// ---------------------------------------------------------------------------
// Conditioning contexts

struct Unconditioned {
    bool operator==(const Unconditioned&) const = default;
};
struct SingleDoc {
    std::size_t index;
    bool operator==(const SingleDoc&) const = default;
};
struct AllDocs {
    bool operator==(const AllDocs&) const = default;
};
struct Subset {
    std::vector<std::size_t> indices;  // strictly increasing, non-empty
    bool operator==(const Subset&) const = default;
};

class ContextSpec {
public:
    using Variant = std::variant<Unconditioned, SingleDoc, AllDocs, Subset>;

    ContextSpec() = default;
    ContextSpec(Variant v) : variant_(std::move(v)) {}  // NOLINT(implicit)

    static ContextSpec unconditioned() { return {Unconditioned{}}; }
    static ContextSpec single(std::size_t index) { return {SingleDoc{index}}; }
    static ContextSpec all() { return {AllDocs{}}; }
    /// Sorts and validates the index list.
    static ContextSpec subset(std::vector<std::size_t> indices);

    const Variant& variant() const noexcept { return variant_; }

    /// Indices of the documents placed in the prompt, in prompt order.
    std::vector<std::size_t> indices(std::size_t k) const;

    /// Throws DomainError when any index falls outside [0, k).
    void validate(std::size_t k) const;

    /// "none", "all", "doc:2", "subset:0,3".
    std::string label() const;
    static ContextSpec parse(const std::string& label);

    bool operator==(const ContextSpec&) const = default;

private:
    Variant variant_ = Unconditioned{};
};

// ---------------------------------------------------------------------------
// Generation

/// Sampling parameters for one conditioning context.
struct DecodingParams {
    double temperature = 1.0;
    std::size_t n_samples = 10;
    int max_tokens = 256;
    /// Only the mock provider consumes the seed.
    std::optional<std::uint64_t> seed;

    void validate() const;
    bool operator==(const DecodingParams&) const = default;
};

struct GenerationSample {
    std::string text;
    std::string context_signature;
    std::size_t sample_index = 0;

    bool operator==(const GenerationSample&) const = default;
};

struct ResponseSet {
    std::string query_id;
    ContextSpec context;
    std::vector<GenerationSample> samples;
    DecodingParams decoding;

    std::size_t size() const noexcept { return samples.size(); }
    std::vector<std::string> texts() const;
    const std::string& signature() const;
};

// ---------------------------------------------------------------------------
// Entropy and influence

enum class Estimator { Literal, Clustered };

const char* to_string(Estimator e) noexcept;
Estimator estimator_from_string(const std::string& name);

/// Semantic entropy in bits.
struct EntropyEstimate {
    double value = 0.0;
    Estimator estimator = Estimator::Clustered;
    std::size_t n_samples = 0;
    ContextSpec context;

    bool operator==(const EntropyEstimate&) const = default;
};

struct PidBreakdown {
    double mutual = 0.0;    // H(Y) - H(Y|X_i)
    double union_ = 0.0;    // H(Y) - H(Y|X_1..X_k)
    double excluded = 0.0;  // union - mutual

    bool operator==(const PidBreakdown&) const = default;
};

struct DocumentInfluence {
    std::string doc_id;
    double is_value = 0.0;
    EntropyEstimate entropy_single;
    std::optional<PidBreakdown> pid;
    /// H(Y | all documents except this one); reported only, never used in IS.
    std::optional<EntropyEstimate> entropy_leave_one_out;

    bool operator==(const DocumentInfluence&) const = default;
};

struct InfluenceReport {
    std::string query_id;
    std::vector<DocumentInfluence> per_doc;
    EntropyEstimate entropy_all;
    std::optional<EntropyEstimate> entropy_unconditioned;
    std::vector<std::size_t> ranking;
    /// Distinct generation contexts consumed by the scoring pass, not
    /// counting the unconditioned context.
    std::size_t contexts_consumed = 0;

    bool operator==(const InfluenceReport&) const = default;
};

/// entropy_all - entropy_single. Negative values are legal.
double is_from_entropies(const EntropyEstimate& entropy_all,
                         const EntropyEstimate& entropy_single);

PidBreakdown pid_breakdown(const EntropyEstimate& entropy_unconditioned,
                           const EntropyEstimate& entropy_single,
                           const EntropyEstimate& entropy_all);

/// Indices sorted by descending value; ties keep their original order.
std::vector<std::size_t> rank_descending(std::span<const double> values);

}  // namespace influence
