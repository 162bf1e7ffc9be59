#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>

#include "influence/llm_gateway.hpp"

namespace fixtures {

inline std::filesystem::path dir() { return INFLUENCE_FIXTURE_DIR; }
inline std::filesystem::path golden() { return INFLUENCE_GOLDEN_DIR; }

inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("influence-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::shared_ptr<influence::MockLlm> mock(std::vector<influence::MockPattern> patterns,
                                                std::vector<influence::WeightedResponse> fallback) {
    return std::make_shared<influence::MockLlm>(
        influence::MockScript(std::move(patterns), std::move(fallback)));
}

// Loopback HTTP server for replaying canned provider replies.
class LocalServer {
public:
    LocalServer() {
        port_ = server_.bind_to_any_port("127.0.0.1");
    }
    ~LocalServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    httplib::Server& server() { return server_; }
    void start() {
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace fixtures
