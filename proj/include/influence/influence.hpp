#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "influence/core.hpp"
#include "influence/entropy.hpp"

namespace influence {

struct InfluenceConfig {
    /// Also sample the no-document context and attach a PID breakdown per document.
    bool compute_unconditioned = false;
    /// Also sample the k leave-one-out contexts (reported, never used in IS).
    bool include_leave_one_out = false;
};

/// Raised when a provider fails part-way through a scoring pass. Carries the
/// entropies that were finished before the failure.
class PartialInfluenceError : public Error {
public:
    PartialInfluenceError(const std::string& what, bool provider_failure,
                          std::optional<EntropyEstimate> entropy_all,
                          std::vector<std::optional<EntropyEstimate>> entropy_single)
        : Error(what),
          provider_failure_(provider_failure),
          entropy_all_(std::move(entropy_all)),
          entropy_single_(std::move(entropy_single)) {}

    bool provider_failure() const noexcept { return provider_failure_; }
    const std::optional<EntropyEstimate>& entropy_all() const noexcept { return entropy_all_; }
    const std::vector<std::optional<EntropyEstimate>>& entropy_single() const noexcept {
        return entropy_single_;
    }
    std::size_t completed() const noexcept;

private:
    bool provider_failure_;
    std::optional<EntropyEstimate> entropy_all_;
    std::vector<std::optional<EntropyEstimate>> entropy_single_;
};

/// Influence of each retrieved document: IS_i = H(Y | all docs) - H(Y | doc i).
/// Higher means the response leaned on that document more. Requires k >= 2.
InfluenceReport influence_scores(const Query& query, const RetrievedSet& retrieved,
                                 EntropyEngine& engine, const InfluenceConfig& cfg,
                                 std::uint64_t base_seed);

/// Assembles a report from entropies that were already estimated.
InfluenceReport assemble_report(const std::string& query_id, const std::vector<std::string>& doc_ids,
                                const EntropyEstimate& entropy_all,
                                const std::vector<EntropyEstimate>& entropy_single,
                                const std::optional<EntropyEstimate>& entropy_unconditioned);

/// Document ids from highest to lowest IS; ties keep retrieval order.
std::vector<std::string> rank_documents(const InfluenceReport& report);

/// Throws DomainError when the report breaks its structural invariants.
void validate(const InfluenceReport& report);

}  // namespace influence
