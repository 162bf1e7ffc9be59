#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "influence/core.hpp"
#include "influence/http_client.hpp"

namespace influence {

/// One provider call. `n` may be 1 here (judge and attribution prompts);
/// DecodingParams' N >= 2 rule applies only to ResponseSet generation.
struct CompletionRequest {
    std::string prompt;
    double temperature = 1.0;
    std::size_t n = 1;
    int max_tokens = 256;
    std::optional<std::uint64_t> seed;
    std::string signature;
};

class LlmProvider {
public:
    virtual ~LlmProvider() = default;

    /// Exactly request.n completions, in order.
    virtual std::vector<std::string> complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Hash of the prompt and every decoding parameter, as 16 hex digits.
std::string context_signature(std::string_view prompt, double temperature, std::size_t n,
                              int max_tokens, std::optional<std::uint64_t> seed);
std::string context_signature(std::string_view prompt, const DecodingParams& params);

// ---------------------------------------------------------------------------
// Scripted mock

struct WeightedResponse {
    std::string text;
    double weight = 1.0;
};

struct MockPattern {
    /// Either a 16-hex-digit context signature (exact match) or a glob over
    /// the prompt text where '*' matches any run and '?' any single byte.
    std::string match;
    std::vector<WeightedResponse> responses;
};

class MockScript {
public:
    MockScript() = default;
    MockScript(std::vector<MockPattern> patterns, std::vector<WeightedResponse> fallback);

    static MockScript from_json(const nlohmann::json& j);
    static MockScript load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    /// First matching pattern wins; otherwise the fallback. Throws DomainError
    /// when nothing applies.
    const std::vector<WeightedResponse>& resolve(std::string_view prompt,
                                                 std::string_view signature) const;

    const std::vector<MockPattern>& patterns() const noexcept { return patterns_; }
    const std::vector<WeightedResponse>& fallback() const noexcept { return fallback_; }

private:
    std::vector<MockPattern> patterns_;
    std::vector<WeightedResponse> fallback_;
};

bool glob_match(std::string_view pattern, std::string_view text);

/// Draws from the resolved weighted list using a SplitMix64 stream seeded with
/// derive_seed(seed, signature). Sample j takes the first response whose
/// cumulative weight exceeds uniform() * total. Temperature 0 always returns
/// the heaviest response.
class MockLlm : public LlmProvider {
public:
    explicit MockLlm(MockScript script);

    std::vector<std::string> complete(const CompletionRequest& request) override;
    std::string name() const override { return "mock"; }

    const MockScript& script() const noexcept { return script_; }

private:
    MockScript script_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible chat completions

struct RemoteLlmConfig {
    std::string endpoint;
    std::string model;
    std::string api_key;
    /// Ask for all N completions in one request via the `n` field.
    bool supports_n = true;
    RetryPolicy retry;
    std::size_t max_in_flight = 4;
    std::chrono::seconds timeout{60};
};

class RemoteLlm : public LlmProvider {
public:
    explicit RemoteLlm(RemoteLlmConfig config);

    std::vector<std::string> complete(const CompletionRequest& request) override;
    std::string name() const override { return "remote:" + config_.model; }

    /// Request body for one call asking for `n` completions.
    nlohmann::json request_body(const CompletionRequest& request, std::size_t n) const;

private:
    std::vector<std::string> call(const CompletionRequest& request, std::size_t n);

    RemoteLlmConfig config_;
    JsonPoster poster_;
};

/// Pulls choices[*].message.content out of a reply, in reply order.
std::vector<std::string> parse_chat_choices(const nlohmann::json& reply);

// ---------------------------------------------------------------------------

/// Front door for all generation. Tracks the distinct context signatures it
/// has been asked to sample so callers can audit their query budget.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<LlmProvider> provider);

    /// N samples for one prompt, all tagged with the same signature.
    ResponseSet generate(const std::string& prompt, const DecodingParams& params,
                         const ContextSpec& context = {}, const std::string& query_id = {});

    /// A single reply (judge and attribution prompts). Not counted as a context.
    std::string complete(const std::string& prompt, double temperature, int max_tokens,
                         std::optional<std::uint64_t> seed);

    std::size_t distinct_contexts() const noexcept { return distinct_.load(); }
    void reset_counter();

    LlmProvider& provider() noexcept { return *provider_; }

private:
    std::shared_ptr<LlmProvider> provider_;
    mutable std::mutex mu_;
    std::unordered_set<std::string> seen_;
    std::atomic<std::size_t> distinct_{0};
};

/// Generation contexts needed to score k documents: k single-document contexts
/// plus the all-document one, and k more leave-one-out contexts on request.
std::size_t query_budget(std::size_t k, bool include_leave_one_out);

}  // namespace influence
