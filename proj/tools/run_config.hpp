#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "influence/core.hpp"
#include "influence/embedding.hpp"
#include "influence/entropy.hpp"
#include "influence/llm_gateway.hpp"

namespace influence::cli {

struct ProviderSettings {
    std::string provider = "mock";  // mock | remote
    std::string endpoint;
    std::string model;
    std::string api_key;
    /// Mock LLM script path; empty = built-in default script.
    std::string script;
    bool supports_n = true;
    std::size_t max_in_flight = 4;
    int timeout_s = 60;
    /// Mock embedder dimension; for remote, 0 learns it from the first reply.
    std::size_t dimension = 64;
};

struct RunConfig {
    ProviderSettings llm;
    ProviderSettings embedding;

    std::size_t n_samples = 10;
    double temperature = 1.0;
    int max_tokens = 256;
    Estimator estimator = Estimator::Clustered;
    double cluster_threshold = 0.9;
    std::size_t k = 5;
    std::optional<std::uint64_t> seed = 0;
    std::size_t workers = 1;
    std::string output_dir = "influence-out";
    bool budget_2k1 = false;
    bool compute_unconditioned = false;
    int retry_attempts = 3;
    int retry_backoff_ms = 500;

    bool any_mock() const { return llm.provider == "mock" || embedding.provider == "mock"; }

    /// Throws ConfigError naming the offending key or variable.
    void validate() const;

    EntropyConfig entropy_config() const;
};

/// Overlays a JSON config document onto `cfg`. Unknown keys are rejected.
void apply_config_json(RunConfig& cfg, const nlohmann::json& doc);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// INFLUENCE_LLM_API_KEY, INFLUENCE_EMBED_API_KEY, INFLUENCE_LLM_ENDPOINT,
/// INFLUENCE_LLM_MODEL, INFLUENCE_EMBED_ENDPOINT, INFLUENCE_EMBED_MODEL,
/// INFLUENCE_SEED.
void apply_env(RunConfig& cfg, const EnvLookup& env);

/// Built-in script used with --mock when no script is given.
MockScript default_mock_script();

struct ProviderSet {
    std::unique_ptr<Gateway> gateway;
    std::unique_ptr<Embedder> embedder;
};

ProviderSet make_providers(const RunConfig& cfg);

}  // namespace influence::cli
