#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "audit/common.hpp"

namespace audit {

struct Sampling {
    double temperature = 1.0;
    double top_p = 1.0;
};

/// A chat conversation: one optional system message followed by user turns.
/// Prior model outputs are not replayed; elicitation protocols here only
/// accumulate user messages.
struct ChatRequest {
    std::string system_text;
    std::vector<std::string> user_turns;
    Sampling sampling;
    std::string model_tag;

    void validate() const;
};

struct BackendMeta {
    std::string backend_id;
    bool cached = false;
    int attempt_count = 1;
};

struct ChatResponse {
    std::string text;
    BackendMeta meta;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string id() const = 0;
    // Throws TransientBackendError for retryable failures, ProtocolError for
    // unparseable transport payloads, BackendError otherwise.
    virtual std::string complete(const ChatRequest& req) = 0;
};

struct GatewayOptions {
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{200};
    double backoff_factor = 2.0;
    std::filesystem::path cache_dir;  // empty disables caching
    std::string cache_salt;           // bump to force regeneration
};

/// Wraps a backend with retry/backoff and a content-addressed response cache.
/// The cache key covers model tag, sampling, every prompt byte, and the salt.
class LlmGateway {
public:
    LlmGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options);

    ChatResponse complete(const ChatRequest& req);
    std::string request_key(const ChatRequest& req) const;

    const GatewayOptions& options() const { return options_; }

private:
    std::shared_ptr<ChatBackend> backend_;
    GatewayOptions options_;
    std::mutex cache_mutex_;
};

}  // namespace audit
