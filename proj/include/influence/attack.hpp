#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "influence/core.hpp"
#include "influence/entropy.hpp"
#include "influence/influence.hpp"
#include "influence/rag.hpp"

namespace influence {

/// Poison document: the query text, a space, then "The answer is: <target>."
Document craft_poison(const Query& query, const std::string& incorrect_target);

/// Lowercase, punctuation stripped, whitespace collapsed.
std::string normalize_answer(std::string_view text);

/// True when the normalized gold answer does not occur in the normalized response.
bool is_incorrect(std::string_view response, std::string_view gold_answer);

// ---------------------------------------------------------------------------
// Prompt-engineering attribution baseline

/// The source-attribution prompt with ids and contents filled in.
std::string render_attribution_prompt(const Query& query, std::span<const Document> docs);

/// Id from the trailing `**Source:** <id>` line, if it names one of `docs`.
std::optional<std::string> parse_attribution(std::string_view reply, std::span<const Document> docs);

/// Sends the attribution prompt once and parses the cited id. nullopt marks an
/// attribution failure (no Source line, or an id not in `docs`).
std::optional<std::string> attribute_via_prompt(const Query& query, std::span<const Document> docs,
                                                Gateway& gateway, const DecodingParams& decoding);

// ---------------------------------------------------------------------------
// Statistics

/// One-sample proportion z statistic against a null success rate p0.
double z_score(double p_hat, double p0, std::size_t n);
/// Upper normal tail P(Z > z), via erfc.
double p_value_one_sided(double z);
/// 95% Wald half-width, 1.96 sqrt(p(1-p)/n).
double wald_half_width(double p_hat, std::size_t n);

// ---------------------------------------------------------------------------

struct EpisodeResult {
    std::string query_id;
    std::uint64_t seed = 0;
    std::size_t pass = 0;
    std::string incorrect_target;
    std::string primary_response;
    bool response_incorrect = false;
    std::size_t poison_index = 0;
    std::string poison_doc_id;
    /// 1 = highest IS. Present only for incorrect responses.
    std::optional<std::size_t> poison_rank;
    std::optional<InfluenceReport> is_report;
    bool baseline_ran = false;
    /// Baseline's cited id; nullopt with baseline_ran = attribution failure.
    std::optional<std::string> baseline_attribution;

    bool baseline_hit() const {
        return baseline_attribution && *baseline_attribution == poison_doc_id;
    }
    bool operator==(const EpisodeResult&) const = default;
};

struct DetectionStats {
    std::size_t n = 0;
    std::size_t k = 0;
    double top1 = 0.0;
    double top2 = 0.0;
    double top3 = 0.0;
    double p_hat = 0.0;
    double p0 = 0.0;
    std::optional<double> z;
    std::optional<double> p_value;
    std::optional<double> wald_half_width;
    std::optional<double> baseline_rate;
    std::size_t baseline_failures = 0;

    bool operator==(const DetectionStats&) const = default;
};

struct AttackConfig {
    InfluenceConfig influence;
    bool run_baseline = true;
    /// Attempts stop after this many passes over the records.
    std::size_t max_passes = 10;
    std::size_t workers = 1;
    /// Override for the incorrectness check (e.g. an LLM grader in live mode).
    std::function<bool(const std::string& response, const std::string& gold)> incorrect_check;
};

/// One attack: replace document `replace_index` with a crafted poison, sample
/// the all-document context, and when the first sample is wrong score every
/// document and locate the poison in the IS ranking.
EpisodeResult run_poison_episode(const DatasetRecord& record, std::size_t replace_index,
                                 const std::string& incorrect_target, EntropyEngine& engine,
                                 const AttackConfig& cfg, std::uint64_t episode_seed);

struct PoisonEvalResult {
    DetectionStats stats;
    /// Every attempted episode in attempt order, incorrect or not.
    std::vector<EpisodeResult> episodes;
    std::size_t attempts = 0;
    /// Records ran out before the target count of incorrect responses.
    bool partial = false;
};

/// Seeds: episode (record r, pass p) uses derive_seed(seed, "<record id>#<p>");
/// the replaced index is that seed's first draw mod k. Results do not depend on
/// cfg.workers.
PoisonEvalResult run_poison_eval(std::span<const DatasetRecord> records,
                                 std::size_t target_incorrect_count, EntropyEngine& engine,
                                 const AttackConfig& cfg, std::uint64_t seed);

/// Aggregates incorrect episodes into top-1/2/3 rates and the significance test
/// against p0 = 1/k.
DetectionStats detection_stats(std::span<const EpisodeResult> episodes);

/// Incorrect target for a record: its own when present, otherwise the gold
/// answer of the next record (cyclically).
std::string incorrect_target_for(std::span<const DatasetRecord> records, std::size_t index);

}  // namespace influence
