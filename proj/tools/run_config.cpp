#include "run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace influence::cli {

void RunConfig::validate() const {
    for (const auto* p : {&llm, &embedding}) {
        const char* which = p == &llm ? "llm" : "embedding";
        if (p->provider != "mock" && p->provider != "remote") {
            throw ConfigError(std::string(which) + ".provider must be mock or remote");
        }
        if (p->provider == "remote") {
            const char* endpoint_var = p == &llm ? "INFLUENCE_LLM_ENDPOINT" : "INFLUENCE_EMBED_ENDPOINT";
            const char* key_var = p == &llm ? "INFLUENCE_LLM_API_KEY" : "INFLUENCE_EMBED_API_KEY";
            if (p->endpoint.empty()) {
                throw ConfigError(std::string(which) + " provider is remote but no endpoint is set (" +
                                  which + ".endpoint or " + endpoint_var + ")");
            }
            if (p->model.empty()) throw ConfigError(std::string(which) + ".model is required in remote mode");
            if (p->api_key.empty()) {
                throw ConfigError(std::string("remote ") + which + " provider needs an API key in " + key_var);
            }
        }
    }
    if (any_mock() && !seed) throw ConfigError("mock providers require a seed (--seed)");
    if (n_samples < 2) throw ConfigError("n_samples must be at least 2");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
    if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
    if (!(cluster_threshold >= 0.0 && cluster_threshold <= 1.0)) {
        throw ConfigError("cluster_threshold must lie in [0, 1]");
    }
    if (k < 1) throw ConfigError("k must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (retry_attempts < 1) throw ConfigError("retry.attempts must be at least 1");
}

EntropyConfig RunConfig::entropy_config() const {
    EntropyConfig e;
    e.estimator = estimator;
    e.cluster_threshold = cluster_threshold;
    e.decoding.n_samples = n_samples;
    e.decoding.temperature = temperature;
    e.decoding.max_tokens = max_tokens;
    return e;
}

// ---------------------------------------------------------------------------

namespace {

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
    }
}

void apply_provider(ProviderSettings& p, const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config key '" + where + "' must be an object");
    reject_unknown(j,
                   {"provider", "endpoint", "model", "script", "supports_n", "max_in_flight",
                    "timeout_s", "dimension"},
                   where + ".");
    p.provider = j.value("provider", p.provider);
    p.endpoint = j.value("endpoint", p.endpoint);
    p.model = j.value("model", p.model);
    p.script = j.value("script", p.script);
    p.supports_n = j.value("supports_n", p.supports_n);
    p.max_in_flight = j.value("max_in_flight", p.max_in_flight);
    p.timeout_s = j.value("timeout_s", p.timeout_s);
    p.dimension = j.value("dimension", p.dimension);
}

}  // namespace

void apply_config_json(RunConfig& cfg, const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
    try {
        reject_unknown(doc,
                       {"llm", "embedding", "sampling", "entropy", "k", "seed", "workers", "output_dir",
                        "budget_2k1", "compute_unconditioned", "retry"},
                       "");
        if (doc.contains("llm")) apply_provider(cfg.llm, doc["llm"], "llm");
        if (doc.contains("embedding")) apply_provider(cfg.embedding, doc["embedding"], "embedding");
        if (doc.contains("sampling")) {
            const auto& s = doc["sampling"];
            reject_unknown(s, {"n_samples", "temperature", "max_tokens"}, "sampling.");
            cfg.n_samples = s.value("n_samples", cfg.n_samples);
            cfg.temperature = s.value("temperature", cfg.temperature);
            cfg.max_tokens = s.value("max_tokens", cfg.max_tokens);
        }
        if (doc.contains("entropy")) {
            const auto& e = doc["entropy"];
            reject_unknown(e, {"estimator", "cluster_threshold"}, "entropy.");
            if (e.contains("estimator")) cfg.estimator = estimator_from_string(e["estimator"].get<std::string>());
            cfg.cluster_threshold = e.value("cluster_threshold", cfg.cluster_threshold);
        }
        if (doc.contains("retry")) {
            const auto& r = doc["retry"];
            reject_unknown(r, {"attempts", "backoff_ms"}, "retry.");
            cfg.retry_attempts = r.value("attempts", cfg.retry_attempts);
            cfg.retry_backoff_ms = r.value("backoff_ms", cfg.retry_backoff_ms);
        }
        cfg.k = doc.value("k", cfg.k);
        if (doc.contains("seed")) {
            cfg.seed = doc["seed"].is_null() ? std::nullopt
                                             : std::optional<std::uint64_t>(doc["seed"].get<std::uint64_t>());
        }
        cfg.workers = doc.value("workers", cfg.workers);
        cfg.output_dir = doc.value("output_dir", cfg.output_dir);
        cfg.budget_2k1 = doc.value("budget_2k1", cfg.budget_2k1);
        cfg.compute_unconditioned = doc.value("compute_unconditioned", cfg.compute_unconditioned);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    apply_config_json(cfg, doc);
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
}

void apply_env(RunConfig& cfg, const EnvLookup& env) {
    if (auto v = env("INFLUENCE_LLM_API_KEY")) cfg.llm.api_key = *v;
    if (auto v = env("INFLUENCE_EMBED_API_KEY")) cfg.embedding.api_key = *v;
    if (auto v = env("INFLUENCE_LLM_ENDPOINT")) cfg.llm.endpoint = *v;
    if (auto v = env("INFLUENCE_LLM_MODEL")) cfg.llm.model = *v;
    if (auto v = env("INFLUENCE_EMBED_ENDPOINT")) cfg.embedding.endpoint = *v;
    if (auto v = env("INFLUENCE_EMBED_MODEL")) cfg.embedding.model = *v;
    if (auto v = env("INFLUENCE_SEED")) {
        try {
            cfg.seed = std::stoull(*v);
        } catch (const std::exception&) {
            throw ConfigError("INFLUENCE_SEED must be an unsigned integer");
        }
    }
}

MockScript default_mock_script() {
    return MockScript({}, {{"I am not sure.", 1.0}, {"It is unclear from the context.", 1.0}, {"Unknown", 1.0}});
}

ProviderSet make_providers(const RunConfig& cfg) {
    cfg.validate();
    ProviderSet set;
    RetryPolicy retry{cfg.retry_attempts, std::chrono::milliseconds(cfg.retry_backoff_ms)};

    std::shared_ptr<LlmProvider> llm;
    if (cfg.llm.provider == "mock") {
        llm = std::make_shared<MockLlm>(cfg.llm.script.empty() ? default_mock_script()
                                                               : MockScript::load(cfg.llm.script));
    } else {
        RemoteLlmConfig r;
        r.endpoint = cfg.llm.endpoint;
        r.model = cfg.llm.model;
        r.api_key = cfg.llm.api_key;
        r.supports_n = cfg.llm.supports_n;
        r.retry = retry;
        r.max_in_flight = cfg.llm.max_in_flight;
        r.timeout = std::chrono::seconds(cfg.llm.timeout_s);
        llm = std::make_shared<RemoteLlm>(r);
    }
    set.gateway = std::make_unique<Gateway>(llm);

    if (cfg.embedding.provider == "mock") {
        set.embedder = std::make_unique<MockEmbedder>(cfg.embedding.dimension);
    } else {
        RemoteEmbedderConfig r;
        r.endpoint = cfg.embedding.endpoint;
        r.model = cfg.embedding.model;
        r.api_key = cfg.embedding.api_key;
        r.retry = retry;
        r.max_in_flight = cfg.embedding.max_in_flight;
        r.timeout = std::chrono::seconds(cfg.embedding.timeout_s);
        set.embedder = std::make_unique<RemoteEmbedder>(r);
    }
    return set;
}

}  // namespace influence::cli
