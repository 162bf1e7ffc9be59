#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "influence/core.hpp"
#include "influence/embedding.hpp"
#include "influence/entropy.hpp"
#include "influence/influence.hpp"
#include "influence/llm_gateway.hpp"
#include "influence/rag.hpp"

namespace influence {

enum class JudgeChoice { B, C, Indeterminate };
enum class JudgeKind { Llm, Embedding };

const char* to_string(JudgeChoice c) noexcept;
JudgeChoice judge_choice_from_string(const std::string& s);
const char* to_string(JudgeKind k) noexcept;
JudgeKind judge_kind_from_string(const std::string& s);

/// The LLM-judge prompt with the three responses filled in.
std::string render_judge_prompt(const std::string& a, const std::string& b, const std::string& c);

/// Accepts exactly "Response B" or "Response C" after trimming whitespace.
JudgeChoice parse_judge_verdict(std::string_view reply);

JudgeChoice judge_llm(const std::string& a, const std::string& b, const std::string& c,
                      Gateway& gateway, const DecodingParams& decoding);

/// Whichever of B and C has the higher cosine to A; an exact tie is Indeterminate.
JudgeChoice judge_embedding(const std::string& a, const std::string& b, const std::string& c,
                            Embedder& embedder);

class Judge {
public:
    virtual ~Judge() = default;
    virtual JudgeChoice choose(const std::string& a, const std::string& b, const std::string& c,
                               std::uint64_t seed) = 0;
    virtual JudgeKind kind() const = 0;
};

class LlmJudge : public Judge {
public:
    LlmJudge(Gateway& gateway, DecodingParams decoding);
    JudgeChoice choose(const std::string& a, const std::string& b, const std::string& c,
                       std::uint64_t seed) override;
    JudgeKind kind() const override { return JudgeKind::Llm; }

private:
    Gateway& gateway_;
    DecodingParams decoding_;
};

class EmbeddingJudge : public Judge {
public:
    explicit EmbeddingJudge(Embedder& embedder) : embedder_(embedder) {}
    JudgeChoice choose(const std::string& a, const std::string& b, const std::string& c,
                       std::uint64_t seed) override;
    JudgeKind kind() const override { return JudgeKind::Embedding; }

private:
    Embedder& embedder_;
};

// ---------------------------------------------------------------------------

struct AblationEpisode {
    std::string query_id;
    std::uint64_t seed = 0;
    std::string response_a;
    std::string response_b;
    std::string response_c;
    /// First entries of the IS ranking (top-m, m = 2 by default).
    std::vector<std::size_t> top2_indices;
    std::vector<std::size_t> b_indices;  // sorted
    std::vector<std::size_t> c_indices;  // sorted
    JudgeChoice judge_choice = JudgeChoice::Indeterminate;
    JudgeKind judge_kind = JudgeKind::Embedding;
    std::vector<double> is_values;

    bool operator==(const AblationEpisode&) const = default;
};

struct AblationConfig {
    InfluenceConfig influence;
    std::size_t top_m = 2;
    std::size_t workers = 1;
};

struct AblationSummary {
    std::size_t n = 0;
    std::size_t count_b = 0;
    std::size_t count_c = 0;
    std::size_t count_indeterminate = 0;
    double rate_b = 0.0;
    double rate_c = 0.0;
    double rate_indeterminate = 0.0;

    bool operator==(const AblationSummary&) const = default;
};

struct AblationEvalResult {
    AblationSummary summary;
    std::vector<AblationEpisode> episodes;
};

/// Splits 0..k-1 by the IS ranking: the first m go to B, the rest to C.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_by_ranking(
    const std::vector<std::size_t>& ranking, std::size_t m);

/// Response A from all documents, B from the top-m by IS, C from the rest.
/// Requires k > m so C is non-empty.
AblationEpisode run_ablation_episode(const DatasetRecord& record, EntropyEngine& engine, Judge& judge,
                                     const AblationConfig& cfg, std::uint64_t episode_seed);

/// Episode seeds are derive_seed(seed, record id).
AblationEvalResult run_ablation_eval(std::span<const DatasetRecord> records, EntropyEngine& engine,
                                     Judge& judge, const AblationConfig& cfg, std::uint64_t seed);

AblationSummary summarize(std::span<const AblationEpisode> episodes);

}  // namespace influence
