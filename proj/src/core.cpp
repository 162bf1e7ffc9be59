#include "influence/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace influence {

const char* to_string(Origin origin) noexcept {
    switch (origin) {
        case Origin::Dataset: return "dataset";
        case Origin::Poisoned: return "poisoned";
        case Origin::Synthetic: return "synthetic";
    }
    return "dataset";
}

Origin origin_from_string(const std::string& name) {
    if (name == "dataset") return Origin::Dataset;
    if (name == "poisoned") return Origin::Poisoned;
    if (name == "synthetic") return Origin::Synthetic;
    throw DomainError("unknown document origin '" + name + "'");
}

void validate(const RetrievedSet& set) {
    if (set.documents.empty()) {
        throw DomainError("retrieved set must hold at least one document");
    }
    std::set<std::string> seen;
    for (const auto& doc : set.documents) {
        if (!seen.insert(doc.id).second) {
            throw DomainError("duplicate document id '" + doc.id + "' in retrieved set");
        }
    }
}

// ---------------------------------------------------------------------------

ContextSpec ContextSpec::subset(std::vector<std::size_t> indices) {
    if (indices.empty()) {
        throw DomainError("subset context needs at least one document");
    }
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
        throw DomainError("subset context lists a document twice");
    }
    return {Subset{std::move(indices)}};
}

std::vector<std::size_t> ContextSpec::indices(std::size_t k) const {
    struct Visitor {
        std::size_t k;
        std::vector<std::size_t> operator()(const Unconditioned&) const { return {}; }
        std::vector<std::size_t> operator()(const SingleDoc& s) const { return {s.index}; }
        std::vector<std::size_t> operator()(const AllDocs&) const {
            std::vector<std::size_t> all(k);
            std::iota(all.begin(), all.end(), std::size_t{0});
            return all;
        }
        std::vector<std::size_t> operator()(const Subset& s) const { return s.indices; }
    };
    return std::visit(Visitor{k}, variant_);
}

void ContextSpec::validate(std::size_t k) const {
    if (const auto* s = std::get_if<Subset>(&variant_)) {
        if (s->indices.empty()) throw DomainError("subset context is empty");
        for (std::size_t i = 1; i < s->indices.size(); ++i) {
            if (s->indices[i] <= s->indices[i - 1]) {
                throw DomainError("subset indices must be strictly increasing");
            }
        }
    }
    for (std::size_t i : indices(k)) {
        if (i >= k) {
            throw DomainError("context index " + std::to_string(i) + " out of range for k=" +
                              std::to_string(k));
        }
    }
}

std::string ContextSpec::label() const {
    struct Visitor {
        std::string operator()(const Unconditioned&) const { return "none"; }
        std::string operator()(const SingleDoc& s) const { return "doc:" + std::to_string(s.index); }
        std::string operator()(const AllDocs&) const { return "all"; }
        std::string operator()(const Subset& s) const {
            std::string out = "subset:";
            for (std::size_t i = 0; i < s.indices.size(); ++i) {
                if (i) out += ',';
                out += std::to_string(s.indices[i]);
            }
            return out;
        }
    };
    return std::visit(Visitor{}, variant_);
}

namespace {

std::size_t parse_index(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw DomainError("bad context index '" + s + "'");
    }
    return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

ContextSpec ContextSpec::parse(const std::string& label) {
    if (label == "none") return unconditioned();
    if (label == "all") return all();
    if (label.rfind("doc:", 0) == 0) return single(parse_index(label.substr(4)));
    if (label.rfind("subset:", 0) == 0) {
        std::vector<std::size_t> idx;
        std::stringstream ss(label.substr(7));
        std::string item;
        while (std::getline(ss, item, ',')) idx.push_back(parse_index(item));
        auto spec = subset(idx);
        // Labels are canonical: reject unsorted input rather than silently reordering.
        if (std::get<Subset>(spec.variant()).indices != idx) {
            throw DomainError("subset indices must be strictly increasing: '" + label + "'");
        }
        return spec;
    }
    throw DomainError("unknown context label '" + label + "'");
}

// ---------------------------------------------------------------------------

void DecodingParams::validate() const {
    if (n_samples < 2) {
        throw DomainError("n_samples must be at least 2 (got " + std::to_string(n_samples) + ")");
    }
    if (!(temperature >= 0.0)) throw DomainError("temperature must be non-negative");
    if (max_tokens <= 0) throw DomainError("max_tokens must be positive");
}

std::vector<std::string> ResponseSet::texts() const {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.text);
    return out;
}

const std::string& ResponseSet::signature() const {
    static const std::string empty;
    return samples.empty() ? empty : samples.front().context_signature;
}

const char* to_string(Estimator e) noexcept {
    return e == Estimator::Literal ? "literal" : "clustered";
}

Estimator estimator_from_string(const std::string& name) {
    if (name == "literal") return Estimator::Literal;
    if (name == "clustered") return Estimator::Clustered;
    throw DomainError("unknown estimator '" + name + "' (expected literal or clustered)");
}

// ---------------------------------------------------------------------------

namespace {

void require_comparable(const EntropyEstimate& a, const EntropyEstimate& b) {
    if (a.estimator != b.estimator) {
        throw InvalidComparison(std::string("cannot compare ") + to_string(a.estimator) +
                                " and " + to_string(b.estimator) + " entropy estimates");
    }
    if (a.n_samples != b.n_samples) {
        throw InvalidComparison("cannot compare entropy estimates over " +
                                std::to_string(a.n_samples) + " and " +
                                std::to_string(b.n_samples) + " samples");
    }
}

}  // namespace

double is_from_entropies(const EntropyEstimate& entropy_all, const EntropyEstimate& entropy_single) {
    require_comparable(entropy_all, entropy_single);
    return entropy_all.value - entropy_single.value;
}

PidBreakdown pid_breakdown(const EntropyEstimate& entropy_unconditioned,
                           const EntropyEstimate& entropy_single,
                           const EntropyEstimate& entropy_all) {
    require_comparable(entropy_unconditioned, entropy_single);
    require_comparable(entropy_unconditioned, entropy_all);
    PidBreakdown pid;
    pid.mutual = entropy_unconditioned.value - entropy_single.value;
    pid.union_ = entropy_unconditioned.value - entropy_all.value;
    pid.excluded = pid.union_ - pid.mutual;
    return pid;
}

std::vector<std::size_t> rank_descending(std::span<const double> values) {
    for (double v : values) {
        if (std::isnan(v)) throw DomainError("cannot rank NaN influence scores");
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return order;
}

}  // namespace influence
