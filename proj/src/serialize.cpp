#include "influence/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace influence {

namespace {

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

std::string fixed(double v, int precision = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string percent(double v) { return fixed(100.0 * v, 1) + "%"; }

// Built by hand: a braced list of [string, value] pairs would become an object.
nlohmann::json table(const std::vector<std::pair<std::string, nlohmann::json>>& rows) {
    nlohmann::json out = {{"columns", nlohmann::json::array({"metric", "rate"})}, {"rows", nlohmann::json::array()}};
    for (const auto& [name, value] : rows) out["rows"].push_back(nlohmann::json::array({name, value}));
    return out;
}

}  // namespace

void to_json(nlohmann::json& j, const ContextSpec& c) { j = c.label(); }
void from_json(const nlohmann::json& j, ContextSpec& c) { c = ContextSpec::parse(j.get<std::string>()); }

void to_json(nlohmann::json& j, const EntropyEstimate& e) {
    j = {{"value", e.value},
         {"estimator", to_string(e.estimator)},
         {"n_samples", e.n_samples},
         {"context", e.context}};
}
void from_json(const nlohmann::json& j, EntropyEstimate& e) {
    e.value = j.at("value").get<double>();
    e.estimator = estimator_from_string(j.at("estimator").get<std::string>());
    e.n_samples = j.at("n_samples").get<std::size_t>();
    e.context = j.at("context").get<ContextSpec>();
}

void to_json(nlohmann::json& j, const PidBreakdown& p) {
    j = {{"mutual", p.mutual}, {"union", p.union_}, {"excluded", p.excluded}};
}
void from_json(const nlohmann::json& j, PidBreakdown& p) {
    p.mutual = j.at("mutual").get<double>();
    p.union_ = j.at("union").get<double>();
    p.excluded = j.at("excluded").get<double>();
}

void to_json(nlohmann::json& j, const DocumentInfluence& d) {
    j = {{"doc_id", d.doc_id},
         {"is_value", d.is_value},
         {"entropy_single", d.entropy_single},
         {"pid", opt(d.pid)},
         {"entropy_leave_one_out", opt(d.entropy_leave_one_out)}};
}
void from_json(const nlohmann::json& j, DocumentInfluence& d) {
    d.doc_id = j.at("doc_id").get<std::string>();
    d.is_value = j.at("is_value").get<double>();
    d.entropy_single = j.at("entropy_single").get<EntropyEstimate>();
    d.pid = get_opt<PidBreakdown>(j, "pid");
    d.entropy_leave_one_out = get_opt<EntropyEstimate>(j, "entropy_leave_one_out");
}

void to_json(nlohmann::json& j, const InfluenceReport& r) {
    j = {{"query_id", r.query_id},
         {"per_doc", r.per_doc},
         {"entropy_all", r.entropy_all},
         {"entropy_unconditioned", opt(r.entropy_unconditioned)},
         {"ranking", r.ranking},
         {"contexts_consumed", r.contexts_consumed}};
}
void from_json(const nlohmann::json& j, InfluenceReport& r) {
    r.query_id = j.at("query_id").get<std::string>();
    r.per_doc = j.at("per_doc").get<std::vector<DocumentInfluence>>();
    r.entropy_all = j.at("entropy_all").get<EntropyEstimate>();
    r.entropy_unconditioned = get_opt<EntropyEstimate>(j, "entropy_unconditioned");
    r.ranking = j.at("ranking").get<std::vector<std::size_t>>();
    r.contexts_consumed = j.at("contexts_consumed").get<std::size_t>();
}

void to_json(nlohmann::json& j, const EpisodeResult& e) {
    j = {{"query_id", e.query_id},
         {"seed", e.seed},
         {"pass", e.pass},
         {"incorrect_target", e.incorrect_target},
         {"primary_response", e.primary_response},
         {"response_incorrect", e.response_incorrect},
         {"poison_index", e.poison_index},
         {"poison_doc_id", e.poison_doc_id},
         {"poison_rank", opt(e.poison_rank)},
         {"is_report", opt(e.is_report)},
         {"baseline_ran", e.baseline_ran},
         {"baseline_attribution", opt(e.baseline_attribution)}};
}
void from_json(const nlohmann::json& j, EpisodeResult& e) {
    e.query_id = j.at("query_id").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.pass = j.at("pass").get<std::size_t>();
    e.incorrect_target = j.at("incorrect_target").get<std::string>();
    e.primary_response = j.at("primary_response").get<std::string>();
    e.response_incorrect = j.at("response_incorrect").get<bool>();
    e.poison_index = j.at("poison_index").get<std::size_t>();
    e.poison_doc_id = j.at("poison_doc_id").get<std::string>();
    e.poison_rank = get_opt<std::size_t>(j, "poison_rank");
    e.is_report = get_opt<InfluenceReport>(j, "is_report");
    e.baseline_ran = j.at("baseline_ran").get<bool>();
    e.baseline_attribution = get_opt<std::string>(j, "baseline_attribution");
}

void to_json(nlohmann::json& j, const DetectionStats& s) {
    j = {{"n", s.n},
         {"k", s.k},
         {"top1", s.top1},
         {"top2", s.top2},
         {"top3", s.top3},
         {"p_hat", s.p_hat},
         {"p0", s.p0},
         {"z", opt(s.z)},
         {"p_value", opt(s.p_value)},
         {"wald_half_width", opt(s.wald_half_width)},
         {"baseline_rate", opt(s.baseline_rate)},
         {"baseline_failures", s.baseline_failures}};
}
void from_json(const nlohmann::json& j, DetectionStats& s) {
    s.n = j.at("n").get<std::size_t>();
    s.k = j.at("k").get<std::size_t>();
    s.top1 = j.at("top1").get<double>();
    s.top2 = j.at("top2").get<double>();
    s.top3 = j.at("top3").get<double>();
    s.p_hat = j.at("p_hat").get<double>();
    s.p0 = j.at("p0").get<double>();
    s.z = get_opt<double>(j, "z");
    s.p_value = get_opt<double>(j, "p_value");
    s.wald_half_width = get_opt<double>(j, "wald_half_width");
    s.baseline_rate = get_opt<double>(j, "baseline_rate");
    s.baseline_failures = j.at("baseline_failures").get<std::size_t>();
}

void to_json(nlohmann::json& j, const AblationEpisode& e) {
    j = {{"query_id", e.query_id},
         {"seed", e.seed},
         {"response_a", e.response_a},
         {"response_b", e.response_b},
         {"response_c", e.response_c},
         {"top2_indices", e.top2_indices},
         {"b_indices", e.b_indices},
         {"c_indices", e.c_indices},
         {"judge_choice", to_string(e.judge_choice)},
         {"judge_kind", to_string(e.judge_kind)},
         {"is_values", e.is_values}};
}
void from_json(const nlohmann::json& j, AblationEpisode& e) {
    e.query_id = j.at("query_id").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.response_a = j.at("response_a").get<std::string>();
    e.response_b = j.at("response_b").get<std::string>();
    e.response_c = j.at("response_c").get<std::string>();
    e.top2_indices = j.at("top2_indices").get<std::vector<std::size_t>>();
    e.b_indices = j.at("b_indices").get<std::vector<std::size_t>>();
    e.c_indices = j.at("c_indices").get<std::vector<std::size_t>>();
    e.judge_choice = judge_choice_from_string(j.at("judge_choice").get<std::string>());
    e.judge_kind = judge_kind_from_string(j.at("judge_kind").get<std::string>());
    e.is_values = j.at("is_values").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const AblationSummary& s) {
    j = {{"n", s.n},
         {"count_b", s.count_b},
         {"count_c", s.count_c},
         {"count_indeterminate", s.count_indeterminate},
         {"rate_b", s.rate_b},
         {"rate_c", s.rate_c},
         {"rate_indeterminate", s.rate_indeterminate}};
}
void from_json(const nlohmann::json& j, AblationSummary& s) {
    s.n = j.at("n").get<std::size_t>();
    s.count_b = j.at("count_b").get<std::size_t>();
    s.count_c = j.at("count_c").get<std::size_t>();
    s.count_indeterminate = j.at("count_indeterminate").get<std::size_t>();
    s.rate_b = j.at("rate_b").get<double>();
    s.rate_c = j.at("rate_c").get<double>();
    s.rate_indeterminate = j.at("rate_indeterminate").get<double>();
}

// ---------------------------------------------------------------------------

nlohmann::json poison_summary_json(const PoisonEvalResult& result) {
    const auto& s = result.stats;
    return {{"stats", s},
            {"attempts", result.attempts},
            {"partial", result.partial},
            {"table", table({{"Top 1", s.top1},
                             {"Top 2", s.top2},
                             {"Top 3", s.top3},
                             {"Prompt Eng.", opt(s.baseline_rate)}})}};
}

nlohmann::json ablation_summary_json(const AblationEvalResult& result) {
    const auto& s = result.summary;
    return {{"summary", s},
            {"table", table({{"Rate Response B is Chosen", s.rate_b},
                             {"Rate Response C is Chosen", s.rate_c},
                             {"Rate Indeterminate", s.rate_indeterminate}})}};
}

std::string format_report_table(const InfluenceReport& report) {
    std::ostringstream out;
    out << "query " << report.query_id << "  H(Y|all) = " << fixed(report.entropy_all.value) << " bits ("
        << to_string(report.entropy_all.estimator) << ", N=" << report.entropy_all.n_samples << ")\n";
    if (report.entropy_unconditioned) {
        out << "H(Y) = " << fixed(report.entropy_unconditioned->value) << " bits\n";
    }
    out << "rank  idx  doc_id                          H(Y|doc)      IS\n";
    for (std::size_t r = 0; r < report.ranking.size(); ++r) {
        const std::size_t i = report.ranking[r];
        const auto& d = report.per_doc[i];
        char line[160];
        std::snprintf(line, sizeof line, "%4zu  %3zu  %-30s %9s %8s\n", r + 1, i, d.doc_id.c_str(),
                      fixed(d.entropy_single.value).c_str(), fixed(d.is_value).c_str());
        out << line;
    }
    out << "contexts consumed: " << report.contexts_consumed << "\n";
    return out.str();
}

std::string format_detection_table(const DetectionStats& s) {
    std::ostringstream out;
    out << "incorrect responses: " << s.n << "\n";
    out << "Top 1        " << percent(s.top1) << "\n";
    out << "Top 2        " << percent(s.top2) << "\n";
    out << "Top 3        " << percent(s.top3) << "\n";
    out << "Prompt Eng.  " << (s.baseline_rate ? percent(*s.baseline_rate) : std::string("n/a")) << "\n";
    if (s.z) {
        out << "z = " << fixed(*s.z, 2) << " against p0 = " << fixed(s.p0, 3) << ", one-sided p = ";
        char p[32];
        std::snprintf(p, sizeof p, "%.3g", *s.p_value);
        out << p << "\n";
    }
    if (s.wald_half_width) out << "95% Wald half-width: " << percent(*s.wald_half_width) << "\n";
    return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace influence
