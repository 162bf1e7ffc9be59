#include "influence/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "influence/rag.hpp"
#include "influence/rng.hpp"

namespace influence {

namespace {

// Sum in ascending order so the result depends only on the multiset of terms.
double sorted_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total;
}

double clamp_bits(double h, std::size_t outcomes) {
    const double max_bits = outcomes > 1 ? std::log2(static_cast<double>(outcomes)) : 0.0;
    return std::clamp(h, 0.0, max_bits);
}

}  // namespace

ProbabilityVector ProbabilityVector::from_scores(std::span<const double> scores) {
    if (scores.empty()) throw DomainError("cannot normalize an empty score vector");
    for (double s : scores) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("scores must be finite and non-negative");
    }
    ProbabilityVector out;
    const double total = sorted_sum({scores.begin(), scores.end()});
    if (total == 0.0) {
        out.p.assign(scores.size(), 1.0 / static_cast<double>(scores.size()));
        return out;
    }
    out.p.reserve(scores.size());
    for (double s : scores) out.p.push_back(s / total);
    return out;
}

bool ProbabilityVector::valid() const {
    if (p.empty()) return false;
    for (double x : p) {
        if (!(x >= 0.0)) return false;
    }
    return std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9;
}

double ProbabilityVector::entropy_bits() const {
    std::vector<double> sorted(p);
    std::sort(sorted.begin(), sorted.end());
    double h = 0.0;
    for (double x : sorted) {
        if (x > 0.0) h -= x * std::log2(x);
    }
    return clamp_bits(h, p.size());
}

std::size_t ClusterAssignment::cluster_count() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

std::vector<std::size_t> ClusterAssignment::sizes() const {
    std::vector<std::size_t> out(cluster_count(), 0);
    for (std::size_t label : labels) ++out[label];
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> literal_scores(const SimilarityMatrix& sim) {
    const std::size_t n = sim.size();
    if (n < 2) throw DomainError("semantic entropy needs at least 2 samples");
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row;
        row.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) row.push_back(to_unit_interval(sim.at(i, j)));
        }
        scores[i] = sorted_sum(std::move(row)) / static_cast<double>(n - 1);
    }
    return scores;
}

EntropyEstimate literal_semantic_entropy(const SimilarityMatrix& sim) {
    const auto scores = literal_scores(sim);
    const auto probs = ProbabilityVector::from_scores(scores);
    EntropyEstimate out;
    out.value = probs.entropy_bits();
    out.estimator = Estimator::Literal;
    out.n_samples = sim.size();
    return out;
}

ClusterAssignment cluster_by_similarity(const SimilarityMatrix& sim, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw DomainError("cluster threshold must lie in [0, 1]");
    }
    const std::size_t n = sim.size();
    if (n < 2) throw DomainError("semantic entropy needs at least 2 samples");

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (to_unit_interval(sim.at(i, j)) >= threshold) {
                const auto a = find(i), b = find(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }

    ClusterAssignment out;
    out.threshold = threshold;
    out.labels.resize(n);
    std::map<std::size_t, std::size_t> relabel;
    for (std::size_t i = 0; i < n; ++i) {
        const auto root = find(i);
        auto [it, inserted] = relabel.emplace(root, relabel.size());
        out.labels[i] = it->second;
    }
    return out;
}

double entropy_from_counts(std::span<const std::size_t> counts) {
    std::vector<std::size_t> nonzero;
    for (auto c : counts) {
        if (c > 0) nonzero.push_back(c);
    }
    if (nonzero.size() <= 1) return 0.0;
    std::sort(nonzero.begin(), nonzero.end());
    const double total = static_cast<double>(std::accumulate(nonzero.begin(), nonzero.end(), std::size_t{0}));
    // H = log2 N - (1/N) sum c log2 c; exact for the all-singleton case.
    double weighted = 0.0;
    for (auto c : nonzero) {
        const double cd = static_cast<double>(c);
        weighted += cd * std::log2(cd);
    }
    return clamp_bits(std::log2(total) - weighted / total, static_cast<std::size_t>(total));
}

std::pair<EntropyEstimate, ClusterAssignment> clustered_semantic_entropy(const SimilarityMatrix& sim,
                                                                         double threshold) {
    auto clusters = cluster_by_similarity(sim, threshold);
    const auto sizes = clusters.sizes();
    EntropyEstimate out;
    out.value = entropy_from_counts(sizes);
    out.estimator = Estimator::Clustered;
    out.n_samples = sim.size();
    return {out, std::move(clusters)};
}

// ---------------------------------------------------------------------------

void EntropyConfig::validate() const {
    if (!(cluster_threshold >= 0.0 && cluster_threshold <= 1.0)) {
        throw DomainError("cluster_threshold must lie in [0, 1]");
    }
    decoding.validate();
}

EntropyEngine::EntropyEngine(Gateway& gateway, Embedder& embedder, EntropyConfig config)
    : gateway_(gateway), embedder_(embedder), config_(std::move(config)) {
    config_.validate();
}

std::uint64_t EntropyEngine::context_seed(std::uint64_t base_seed, const Query& query,
                                          std::span<const Document> docs,
                                          const ContextSpec& context) {
    std::vector<std::string> ids;
    for (std::size_t i : context.indices(docs.size())) ids.push_back(docs[i].id);
    std::sort(ids.begin(), ids.end());
    std::string scope = query.text;
    for (const auto& id : ids) {
        scope += '\x1f';
        scope += id;
    }
    return derive_seed(base_seed, scope);
}

ContextEvaluation EntropyEngine::score(ResponseSet responses) {
    ContextEvaluation out;
    const auto sim = similarity_matrix(responses, embedder_);
    if (config_.estimator == Estimator::Literal) {
        out.entropy = literal_semantic_entropy(sim);
    } else {
        auto [estimate, clusters] = clustered_semantic_entropy(sim, config_.cluster_threshold);
        out.entropy = estimate;
        out.clusters = std::move(clusters);
    }
    out.entropy.context = responses.context;
    out.responses = std::move(responses);
    return out;
}

std::shared_ptr<const ContextEvaluation> EntropyEngine::evaluate(const Query& query,
                                                                 std::span<const Document> docs,
                                                                 const ContextSpec& context,
                                                                 std::uint64_t base_seed) {
    context.validate(docs.size());

    std::vector<Document> in_context;
    for (std::size_t i : context.indices(docs.size())) in_context.push_back(docs[i]);
    const std::string prompt = build_prompt(query, in_context);

    DecodingParams params = config_.decoding;
    params.seed = context_seed(base_seed, query, docs, context);
    const std::string signature = context_signature(prompt, params);

    {
        std::shared_lock lock(cache_mu_);
        if (auto it = cache_.find(signature); it != cache_.end()) {
            // Same prompt under another ContextSpec label (e.g. a one-element subset).
            if (it->second->responses.context == context) return it->second;
            auto relabeled = std::make_shared<ContextEvaluation>(*it->second);
            relabeled->responses.context = context;
            relabeled->entropy.context = context;
            return relabeled;
        }
    }

    auto responses = gateway_.generate(prompt, params, context, query.id);
    auto evaluation = std::make_shared<const ContextEvaluation>(score(std::move(responses)));

    std::unique_lock lock(cache_mu_);
    auto [it, inserted] = cache_.emplace(signature, evaluation);
    return inserted || it->second->responses.context == context ? it->second : evaluation;
}

EntropyEstimate EntropyEngine::conditional_entropy(const Query& query, std::span<const Document> docs,
                                                   const ContextSpec& context,
                                                   std::uint64_t base_seed) {
    return evaluate(query, docs, context, base_seed)->entropy;
}

std::size_t EntropyEngine::cache_size() const {
    std::shared_lock lock(cache_mu_);
    return cache_.size();
}

}  // namespace influence
