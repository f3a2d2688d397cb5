#pragma once

#include <string>

#include "audit/llm_gateway.hpp"

namespace audit {

/// Chat-completions JSON backend over HTTP.
/// Configuration comes from the environment:
///   AUDIT_LLM_ENDPOINT  base URL, e.g. http://localhost:8000
///   AUDIT_LLM_API_KEY   optional bearer token
///   AUDIT_LLM_PATH      optional, defaults to /v1/chat/completions
///   AUDIT_LLM_MODEL     model name used when the request carries no tag
struct HttpBackendConfig {
    std::string endpoint;
    std::string api_key;
    std::string path = "/v1/chat/completions";
    std::string default_model;
    int timeout_seconds = 120;

    static HttpBackendConfig from_environment();
};

class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string id() const override { return "http"; }
    std::string complete(const ChatRequest& req) override;

    // Exposed for tests: body construction and response extraction.
    static std::string build_body(const ChatRequest& req, const std::string& default_model);
    static std::string extract_text(const std::string& body);

private:
    HttpBackendConfig config_;
};

}  // namespace audit
