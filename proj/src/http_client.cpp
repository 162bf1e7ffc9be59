#include "influence/http_client.hpp"

#include <condition_variable>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "influence/errors.hpp"

namespace influence {

EndpointUrl EndpointUrl::parse(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint URL '" + url + "' has no scheme");
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("endpoint URL '" + url + "' must use http or https");
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") {
        throw ConfigError("https endpoint '" + url + "' needs a build with OpenSSL");
    }
#endif
    const auto path_start = url.find('/', scheme_end + 3);
    EndpointUrl out;
    out.scheme_host_port = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (out.scheme_host_port.size() <= scheme_end + 3) {
        throw ConfigError("endpoint URL '" + url + "' has no host");
    }
    return out;
}

struct JsonPoster::Limiter {
    std::mutex mu;
    std::condition_variable cv;
    std::size_t available;

    explicit Limiter(std::size_t n) : available(n == 0 ? 1 : n) {}

    void acquire() {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return available > 0; });
        --available;
    }
    void release() {
        {
            std::lock_guard lock(mu);
            ++available;
        }
        cv.notify_one();
    }
};

JsonPoster::JsonPoster(std::string endpoint, std::string api_key, RetryPolicy retry,
                       std::size_t max_in_flight, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)),
      url_(EndpointUrl::parse(endpoint_)),
      api_key_(std::move(api_key)),
      retry_(retry),
      timeout_(timeout),
      limiter_(std::make_unique<Limiter>(max_in_flight)) {
    if (retry_.max_attempts < 1) retry_.max_attempts = 1;
}

JsonPoster::~JsonPoster() = default;

nlohmann::json JsonPoster::post(const nlohmann::json& body) const {
    const std::string payload = body.dump();
    std::string last_error;
    auto backoff = retry_.initial_backoff;

    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }

        limiter_->acquire();
        httplib::Result res = [&] {
            httplib::Client client(url_.scheme_host_port);
            client.set_connection_timeout(timeout_);
            client.set_read_timeout(timeout_);
            client.set_write_timeout(timeout_);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
            return client.Post(url_.path, headers, payload, "application/json");
        }();
        limiter_->release();

        if (!res) {
            last_error = "transport failure posting to " + endpoint_ + ": " +
                         httplib::to_string(res.error());
            continue;
        }
        const int status = res->status;
        if (status == 429 || status >= 500) {
            last_error = "endpoint " + endpoint_ + " returned HTTP " + std::to_string(status);
            continue;
        }
        if (status < 200 || status >= 300) {
            throw ProtocolError("endpoint " + endpoint_ + " returned HTTP " + std::to_string(status),
                                res->body);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ProtocolError("endpoint " + endpoint_ + " replied with invalid JSON: " + e.what(),
                                res->body);
        }
    }
    throw GatewayError(last_error, retry_.max_attempts);
}

}  // namespace influence
