#include "influence/ablation.hpp"

#include <algorithm>
#include <cctype>

#include "influence/parallel.hpp"
#include "influence/rng.hpp"

namespace influence {

const char* to_string(JudgeChoice c) noexcept {
    switch (c) {
        case JudgeChoice::B: return "B";
        case JudgeChoice::C: return "C";
        case JudgeChoice::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

JudgeChoice judge_choice_from_string(const std::string& s) {
    if (s == "B") return JudgeChoice::B;
    if (s == "C") return JudgeChoice::C;
    if (s == "indeterminate") return JudgeChoice::Indeterminate;
    throw DomainError("unknown judge choice '" + s + "'");
}

const char* to_string(JudgeKind k) noexcept { return k == JudgeKind::Llm ? "llm" : "embedding"; }

JudgeKind judge_kind_from_string(const std::string& s) {
    if (s == "llm") return JudgeKind::Llm;
    if (s == "embedding") return JudgeKind::Embedding;
    throw DomainError("unknown judge '" + s + "' (expected llm or embedding)");
}

std::string render_judge_prompt(const std::string& a, const std::string& b, const std::string& c) {
    return "Your task is to evaluate which of the two following responses, B or C, is more "
           "semantically similar to Response A.\n"
           "\n"
           "[Response A]:\n" +
           a +
           "\n"
           "\n"
           "[Response B]:\n" +
           b +
           "\n"
           "\n"
           "[Response C]:\n" +
           c +
           "\n"
           "\n"
           "Which response is more similar to Response A? **You must answer with only the exact "
           "text \"Response B\" or \"Response C\" and nothing else.** Do not provide any "
           "explanation, preamble, or punctuation.\n";
}

JudgeChoice parse_judge_verdict(std::string_view reply) {
    while (!reply.empty() && std::isspace(static_cast<unsigned char>(reply.front()))) reply.remove_prefix(1);
    while (!reply.empty() && std::isspace(static_cast<unsigned char>(reply.back()))) reply.remove_suffix(1);
    if (reply == "Response B") return JudgeChoice::B;
    if (reply == "Response C") return JudgeChoice::C;
    return JudgeChoice::Indeterminate;
}

namespace {

void require_responses(const std::string& a, const std::string& b, const std::string& c) {
    if (a.empty() || b.empty() || c.empty()) {
        throw DomainError("judging needs three non-empty responses");
    }
}

}  // namespace

JudgeChoice judge_llm(const std::string& a, const std::string& b, const std::string& c,
                      Gateway& gateway, const DecodingParams& decoding) {
    require_responses(a, b, c);
    const auto reply = gateway.complete(render_judge_prompt(a, b, c), decoding.temperature,
                                        decoding.max_tokens, decoding.seed);
    return parse_judge_verdict(reply);
}

JudgeChoice judge_embedding(const std::string& a, const std::string& b, const std::string& c,
                            Embedder& embedder) {
    require_responses(a, b, c);
    const std::vector<std::string> texts{a, b, c};
    const auto v = embedder.embed(texts);
    const double to_b = cosine(v[0], v[1]);
    const double to_c = cosine(v[0], v[2]);
    if (to_b > to_c) return JudgeChoice::B;
    if (to_c > to_b) return JudgeChoice::C;
    return JudgeChoice::Indeterminate;
}

LlmJudge::LlmJudge(Gateway& gateway, DecodingParams decoding)
    : gateway_(gateway), decoding_(std::move(decoding)) {}

JudgeChoice LlmJudge::choose(const std::string& a, const std::string& b, const std::string& c,
                             std::uint64_t seed) {
    DecodingParams d = decoding_;
    d.seed = seed;
    return judge_llm(a, b, c, gateway_, d);
}

JudgeChoice EmbeddingJudge::choose(const std::string& a, const std::string& b, const std::string& c,
                                   std::uint64_t) {
    return judge_embedding(a, b, c, embedder_);
}

// ---------------------------------------------------------------------------

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_by_ranking(
    const std::vector<std::size_t>& ranking, std::size_t m) {
    if (m < 1 || m >= ranking.size()) {
        throw DomainError("top-m split needs 1 <= m < k (m=" + std::to_string(m) +
                          ", k=" + std::to_string(ranking.size()) + ")");
    }
    std::vector<std::size_t> b(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(m));
    std::vector<std::size_t> c(ranking.begin() + static_cast<std::ptrdiff_t>(m), ranking.end());
    std::sort(b.begin(), b.end());
    std::sort(c.begin(), c.end());
    return {std::move(b), std::move(c)};
}

AblationEpisode run_ablation_episode(const DatasetRecord& record, EntropyEngine& engine, Judge& judge,
                                     const AblationConfig& cfg, std::uint64_t episode_seed) {
    const RetrievedSet retrieved = record.retrieved();
    validate(retrieved);
    const std::size_t k = retrieved.k();
    if (k < cfg.top_m + 1) {
        throw DomainError("ablation needs k > " + std::to_string(cfg.top_m) + " (got k=" +
                          std::to_string(k) + ")");
    }
    const auto& docs = retrieved.documents;

    AblationEpisode ep;
    ep.query_id = record.query.id;
    ep.seed = episode_seed;
    ep.judge_kind = judge.kind();

    ep.response_a =
        engine.evaluate(record.query, docs, ContextSpec::all(), episode_seed)->responses.samples.front().text;

    const auto report = influence_scores(record.query, retrieved, engine, cfg.influence, episode_seed);
    for (const auto& d : report.per_doc) ep.is_values.push_back(d.is_value);
    ep.top2_indices.assign(report.ranking.begin(),
                           report.ranking.begin() + static_cast<std::ptrdiff_t>(cfg.top_m));
    std::tie(ep.b_indices, ep.c_indices) = partition_by_ranking(report.ranking, cfg.top_m);

    ep.response_b = engine.evaluate(record.query, docs, ContextSpec::subset(ep.b_indices), episode_seed)
                        ->responses.samples.front()
                        .text;
    ep.response_c = engine.evaluate(record.query, docs, ContextSpec::subset(ep.c_indices), episode_seed)
                        ->responses.samples.front()
                        .text;

    ep.judge_choice = judge.choose(ep.response_a, ep.response_b, ep.response_c,
                                   derive_seed(episode_seed, "judge"));
    return ep;
}

AblationSummary summarize(std::span<const AblationEpisode> episodes) {
    AblationSummary s;
    s.n = episodes.size();
    for (const auto& ep : episodes) {
        switch (ep.judge_choice) {
            case JudgeChoice::B: ++s.count_b; break;
            case JudgeChoice::C: ++s.count_c; break;
            case JudgeChoice::Indeterminate: ++s.count_indeterminate; break;
        }
    }
    if (s.n > 0) {
        const double n = static_cast<double>(s.n);
        s.rate_b = static_cast<double>(s.count_b) / n;
        s.rate_c = static_cast<double>(s.count_c) / n;
        s.rate_indeterminate = static_cast<double>(s.count_indeterminate) / n;
    }
    return s;
}

AblationEvalResult run_ablation_eval(std::span<const DatasetRecord> records, EntropyEngine& engine,
                                     Judge& judge, const AblationConfig& cfg, std::uint64_t seed) {
    if (records.empty()) throw DomainError("ablation evaluation needs at least one record");
    AblationEvalResult result;
    result.episodes.resize(records.size());
    parallel_for(records.size(), cfg.workers, [&](std::size_t i) {
        result.episodes[i] = run_ablation_episode(records[i], engine, judge, cfg,
                                                  derive_seed(seed, records[i].query.id));
    });
    result.summary = summarize(result.episodes);
    return result;
}

}  // namespace influence
