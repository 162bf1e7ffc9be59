#include "influence/llm_gateway.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "influence/rng.hpp"

namespace influence {

std::string context_signature(std::string_view prompt, double temperature, std::size_t n,
                              int max_tokens, std::optional<std::uint64_t> seed) {
    char params[96];
    std::snprintf(params, sizeof params, "\x1f%.17g\x1f%zu\x1f%d\x1f", temperature, n, max_tokens);
    std::uint64_t h = fnv1a64(prompt);
    h = fnv1a64(params, h);
    h = fnv1a64(seed ? std::to_string(*seed) : std::string("-"), h);
    return to_hex(h);
}

std::string context_signature(std::string_view prompt, const DecodingParams& params) {
    return context_signature(prompt, params.temperature, params.n_samples, params.max_tokens,
                             params.seed);
}

// ---------------------------------------------------------------------------

bool glob_match(std::string_view pattern, std::string_view text) {
    // Iterative wildcard matcher with single-star backtracking.
    std::size_t p = 0, t = 0;
    std::size_t star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = t;
        } else if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p;
            ++t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

namespace {

bool is_signature(std::string_view s) {
    return s.size() == 16 &&
           std::all_of(s.begin(), s.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

void validate_responses(const std::vector<WeightedResponse>& responses, const std::string& where) {
    if (responses.empty()) throw DomainError("mock script " + where + " has no responses");
    for (const auto& r : responses) {
        if (!(r.weight > 0.0)) {
            throw DomainError("mock script " + where + " has a non-positive weight for '" +
                              r.text + "'");
        }
    }
}

std::vector<WeightedResponse> responses_from_json(const nlohmann::json& j) {
    std::vector<WeightedResponse> out;
    for (const auto& item : j) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_string() || !item[1].is_number()) {
            throw DomainError("mock response entries must be [\"text\", weight] pairs");
        }
        out.push_back({item[0].get<std::string>(), item[1].get<double>()});
    }
    return out;
}

nlohmann::json responses_to_json(const std::vector<WeightedResponse>& responses) {
    auto arr = nlohmann::json::array();
    for (const auto& r : responses) arr.push_back({r.text, r.weight});
    return arr;
}

}  // namespace

MockScript::MockScript(std::vector<MockPattern> patterns, std::vector<WeightedResponse> fallback)
    : patterns_(std::move(patterns)), fallback_(std::move(fallback)) {
    for (const auto& p : patterns_) validate_responses(p.responses, "pattern '" + p.match + "'");
    if (!fallback_.empty()) validate_responses(fallback_, "fallback");
}

MockScript MockScript::from_json(const nlohmann::json& j) {
    try {
        std::vector<MockPattern> patterns;
        if (j.contains("patterns")) {
            for (const auto& p : j.at("patterns")) {
                patterns.push_back({p.at("match").get<std::string>(),
                                    responses_from_json(p.at("responses"))});
            }
        }
        std::vector<WeightedResponse> fallback;
        if (j.contains("fallback")) fallback = responses_from_json(j.at("fallback"));
        return MockScript(std::move(patterns), std::move(fallback));
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("malformed mock script: ") + e.what());
    }
}

MockScript MockScript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock script " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError("mock script " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

nlohmann::json MockScript::to_json() const {
    auto pats = nlohmann::json::array();
    for (const auto& p : patterns_) {
        pats.push_back({{"match", p.match}, {"responses", responses_to_json(p.responses)}});
    }
    return {{"patterns", pats}, {"fallback", responses_to_json(fallback_)}};
}

const std::vector<WeightedResponse>& MockScript::resolve(std::string_view prompt,
                                                         std::string_view signature) const {
    for (const auto& p : patterns_) {
        if (is_signature(p.match) ? p.match == signature : glob_match(p.match, prompt)) {
            return p.responses;
        }
    }
    if (fallback_.empty()) {
        throw DomainError("mock script has no pattern for context " + std::string(signature) +
                          " and no fallback");
    }
    return fallback_;
}

MockLlm::MockLlm(MockScript script) : script_(std::move(script)) {}

std::vector<std::string> MockLlm::complete(const CompletionRequest& request) {
    const std::string signature =
        request.signature.empty()
            ? context_signature(request.prompt, request.temperature, request.n,
                                request.max_tokens, request.seed)
            : request.signature;
    const auto& responses = script_.resolve(request.prompt, signature);

    std::vector<std::string> out;
    out.reserve(request.n);
    if (request.temperature == 0.0) {
        auto heaviest = std::max_element(
            responses.begin(), responses.end(),
            [](const WeightedResponse& a, const WeightedResponse& b) { return a.weight < b.weight; });
        out.assign(request.n, heaviest->text);
        return out;
    }

    double total = 0.0;
    for (const auto& r : responses) total += r.weight;
    SplitMix64 rng(derive_seed(request.seed.value_or(0), signature));
    for (std::size_t j = 0; j < request.n; ++j) {
        const double target = rng.uniform() * total;
        double cumulative = 0.0;
        std::size_t pick = responses.size() - 1;
        for (std::size_t i = 0; i < responses.size(); ++i) {
            cumulative += responses[i].weight;
            if (target < cumulative) {
                pick = i;
                break;
            }
        }
        out.push_back(responses[pick].text);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> parse_chat_choices(const nlohmann::json& reply) {
    if (!reply.is_object() || !reply.contains("choices") || !reply["choices"].is_array()) {
        throw ProtocolError("chat reply has no choices array", reply.dump());
    }
    std::vector<std::string> out;
    for (const auto& choice : reply["choices"]) {
        const auto* content = choice.is_object() && choice.contains("message") &&
                                      choice["message"].is_object() &&
                                      choice["message"].contains("content")
                                  ? &choice["message"]["content"]
                                  : nullptr;
        if (!content || !content->is_string()) {
            throw ProtocolError("chat choice lacks message.content", reply.dump());
        }
        out.push_back(content->get<std::string>());
    }
    return out;
}

RemoteLlm::RemoteLlm(RemoteLlmConfig config)
    : config_(std::move(config)),
      poster_(config_.endpoint, config_.api_key, config_.retry, config_.max_in_flight,
              config_.timeout) {}

nlohmann::json RemoteLlm::request_body(const CompletionRequest& request, std::size_t n) const {
    return {
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
        {"n", n},
        {"max_tokens", request.max_tokens},
    };
}

std::vector<std::string> RemoteLlm::call(const CompletionRequest& request, std::size_t n) {
    const auto reply = poster_.post(request_body(request, n));
    auto choices = parse_chat_choices(reply);
    if (choices.empty()) throw ProtocolError("chat reply has zero choices", reply.dump());
    return choices;
}

std::vector<std::string> RemoteLlm::complete(const CompletionRequest& request) {
    std::vector<std::string> out;
    out.reserve(request.n);
    if (config_.supports_n) {
        out = call(request, request.n);
        if (out.size() > request.n) out.resize(request.n);
    }
    // Endpoints that ignore `n` answer with one choice; top up one call at a time.
    while (out.size() < request.n) {
        auto more = call(request, 1);
        out.push_back(std::move(more.front()));
    }
    return out;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<LlmProvider> provider) : provider_(std::move(provider)) {
    if (!provider_) throw ConfigError("gateway needs a provider");
}

ResponseSet Gateway::generate(const std::string& prompt, const DecodingParams& params,
                              const ContextSpec& context, const std::string& query_id) {
    if (prompt.empty()) throw DomainError("prompt must be non-empty");
    params.validate();

    CompletionRequest request;
    request.prompt = prompt;
    request.temperature = params.temperature;
    request.n = params.n_samples;
    request.max_tokens = params.max_tokens;
    request.seed = params.seed;
    request.signature = context_signature(prompt, params);

    {
        std::lock_guard lock(mu_);
        if (seen_.insert(request.signature).second) distinct_.fetch_add(1);
    }

    auto texts = provider_->complete(request);
    if (texts.size() != params.n_samples) {
        throw ProtocolError("provider returned " + std::to_string(texts.size()) +
                                " samples, expected " + std::to_string(params.n_samples),
                            {});
    }

    ResponseSet set;
    set.query_id = query_id;
    set.context = context;
    set.decoding = params;
    set.samples.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        set.samples.push_back({std::move(texts[i]), request.signature, i});
    }
    return set;
}

std::string Gateway::complete(const std::string& prompt, double temperature, int max_tokens,
                              std::optional<std::uint64_t> seed) {
    if (prompt.empty()) throw DomainError("prompt must be non-empty");
    CompletionRequest request;
    request.prompt = prompt;
    request.temperature = temperature;
    request.n = 1;
    request.max_tokens = max_tokens;
    request.seed = seed;
    request.signature = context_signature(prompt, temperature, 1, max_tokens, seed);
    auto texts = provider_->complete(request);
    if (texts.empty()) throw ProtocolError("provider returned no completion", {});
    return std::move(texts.front());
}

void Gateway::reset_counter() {
    std::lock_guard lock(mu_);
    seen_.clear();
    distinct_.store(0);
}

std::size_t query_budget(std::size_t k, bool include_leave_one_out) {
    if (k < 1) throw DomainError("query budget needs k >= 1");
    return include_leave_one_out ? 2 * k + 1 : k + 1;
}

}  // namespace influence
