#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>

#include <json.hpp>

namespace influence {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
};

/// Endpoint URL split into the parts cpp-httplib wants.
struct EndpointUrl {
    std::string scheme_host_port;  // "https://api.example.com:443"
    std::string path;              // "/v1/chat/completions"

    static EndpointUrl parse(const std::string& url);
};

/// POSTs JSON with bearer auth. Transport faults, 429 and 5xx replies are
/// retried with exponential backoff and surface as GatewayError once the
/// attempts run out. Anything else that is not a 2xx JSON body raises
/// ProtocolError immediately.
///
/// A single JsonPoster bounds the number of requests in flight across all
/// threads that share it.
class JsonPoster {
public:
    JsonPoster(std::string endpoint, std::string api_key, RetryPolicy retry,
               std::size_t max_in_flight, std::chrono::seconds timeout);
    ~JsonPoster();

    JsonPoster(const JsonPoster&) = delete;
    JsonPoster& operator=(const JsonPoster&) = delete;

    nlohmann::json post(const nlohmann::json& body) const;

    const std::string& endpoint() const noexcept { return endpoint_; }

private:
    struct Limiter;

    std::string endpoint_;
    EndpointUrl url_;
    std::string api_key_;
    RetryPolicy retry_;
    std::chrono::seconds timeout_;
    std::unique_ptr<Limiter> limiter_;
};

}  // namespace influence
