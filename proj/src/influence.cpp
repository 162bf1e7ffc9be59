#include "influence/influence.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace influence {

std::size_t PartialInfluenceError::completed() const noexcept {
    std::size_t n = entropy_all_ ? 1 : 0;
    for (const auto& e : entropy_single_) n += e ? 1 : 0;
    return n;
}

InfluenceReport assemble_report(const std::string& query_id, const std::vector<std::string>& doc_ids,
                                const EntropyEstimate& entropy_all,
                                const std::vector<EntropyEstimate>& entropy_single,
                                const std::optional<EntropyEstimate>& entropy_unconditioned) {
    if (doc_ids.size() != entropy_single.size()) {
        throw DomainError("one single-document entropy per document is required");
    }
    InfluenceReport report;
    report.query_id = query_id;
    report.entropy_all = entropy_all;
    report.entropy_unconditioned = entropy_unconditioned;

    std::vector<double> is_values;
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
        DocumentInfluence d;
        d.doc_id = doc_ids[i];
        d.entropy_single = entropy_single[i];
        d.is_value = is_from_entropies(entropy_all, entropy_single[i]);
        if (entropy_unconditioned) {
            d.pid = pid_breakdown(*entropy_unconditioned, entropy_single[i], entropy_all);
        }
        is_values.push_back(d.is_value);
        report.per_doc.push_back(std::move(d));
    }
    report.ranking = rank_descending(is_values);
    return report;
}

InfluenceReport influence_scores(const Query& query, const RetrievedSet& retrieved,
                                 EntropyEngine& engine, const InfluenceConfig& cfg,
                                 std::uint64_t base_seed) {
    validate(retrieved);
    const std::size_t k = retrieved.k();
    if (k < 2) throw DomainError("influence scores need k >= 2 (got " + std::to_string(k) + ")");
    const auto& docs = retrieved.documents;

    std::set<std::string> signatures;
    std::optional<EntropyEstimate> entropy_all;
    std::vector<std::optional<EntropyEstimate>> single(k);

    auto run = [&](const ContextSpec& context) {
        auto evaluation = engine.evaluate(query, docs, context, base_seed);
        signatures.insert(evaluation->responses.signature());
        return evaluation->entropy;
    };

    std::optional<EntropyEstimate> unconditioned;
    std::vector<std::optional<EntropyEstimate>> leave_one_out(k);
    try {
        entropy_all = run(ContextSpec::all());
        for (std::size_t i = 0; i < k; ++i) single[i] = run(ContextSpec::single(i));
        if (cfg.include_leave_one_out) {
            for (std::size_t i = 0; i < k; ++i) {
                std::vector<std::size_t> rest;
                for (std::size_t j = 0; j < k; ++j) {
                    if (j != i) rest.push_back(j);
                }
                leave_one_out[i] = run(ContextSpec::subset(std::move(rest)));
            }
        }
        if (cfg.compute_unconditioned) {
            // Tracked apart from the IS budget.
            unconditioned = engine.evaluate(query, docs, ContextSpec::unconditioned(), base_seed)->entropy;
        }
    } catch (const GatewayError& e) {
        throw PartialInfluenceError(std::string("influence pass interrupted: ") + e.what(), true,
                                    entropy_all, single);
    } catch (const ProtocolError& e) {
        throw PartialInfluenceError(std::string("influence pass interrupted: ") + e.what(), true,
                                    entropy_all, single);
    }

    std::vector<EntropyEstimate> singles;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < k; ++i) {
        singles.push_back(*single[i]);
        ids.push_back(docs[i].id);
    }
    auto report = assemble_report(query.id, ids, *entropy_all, singles, unconditioned);
    if (cfg.include_leave_one_out) {
        for (std::size_t i = 0; i < k; ++i) report.per_doc[i].entropy_leave_one_out = leave_one_out[i];
    }
    report.contexts_consumed = signatures.size();
    return report;
}

std::vector<std::string> rank_documents(const InfluenceReport& report) {
    std::vector<double> values;
    for (const auto& d : report.per_doc) values.push_back(d.is_value);
    std::vector<std::string> ids;
    for (std::size_t i : rank_descending(values)) ids.push_back(report.per_doc[i].doc_id);
    return ids;
}

void validate(const InfluenceReport& report) {
    const std::size_t k = report.per_doc.size();
    if (report.ranking.size() != k) throw DomainError("ranking length differs from document count");
    std::vector<std::size_t> sorted(report.ranking);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < k; ++i) {
        if (sorted[i] != i) throw DomainError("ranking is not a permutation of 0..k-1");
    }
    for (const auto& d : report.per_doc) {
        if (d.is_value != report.entropy_all.value - d.entropy_single.value) {
            throw DomainError("IS of '" + d.doc_id + "' does not match its entropies");
        }
    }
}

}  // namespace influence
