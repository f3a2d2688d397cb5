#include "audit/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace audit {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

}  // namespace

HttpBackendConfig HttpBackendConfig::from_environment() {
    HttpBackendConfig cfg;
    cfg.endpoint = env_or("AUDIT_LLM_ENDPOINT", "");
    cfg.api_key = env_or("AUDIT_LLM_API_KEY", "");
    cfg.path = env_or("AUDIT_LLM_PATH", "/v1/chat/completions");
    cfg.default_model = env_or("AUDIT_LLM_MODEL", "");
    return cfg;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ValidationError("http backend requires AUDIT_LLM_ENDPOINT");
    }
}

std::string HttpBackend::build_body(const ChatRequest& req, const std::string& default_model) {
    json body;
    body["model"] = req.model_tag.empty() ? default_model : req.model_tag;
    body["temperature"] = req.sampling.temperature;
    body["top_p"] = req.sampling.top_p;
    json messages = json::array();
    if (!req.system_text.empty()) {
        messages.push_back({{"role", "system"}, {"content", req.system_text}});
    }
    for (const auto& turn : req.user_turns) {
        messages.push_back({{"role", "user"}, {"content", turn}});
    }
    body["messages"] = std::move(messages);
    return body.dump();
}

std::string HttpBackend::extract_text(const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("unparseable chat-completions payload: ") + e.what());
    }
}

std::string HttpBackend::complete(const ChatRequest& req) {
    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    auto res = client.Post(config_.path, headers, build_body(req, config_.default_model),
                           "application/json");
    if (!res) {
        throw TransientBackendError("transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransientBackendError("backend status " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw BackendError("backend status " + std::to_string(res->status) + ": " + res->body);
    }
    return extract_text(res->body);
}

}  // namespace audit
