#include "audit/llm_gateway.hpp"

#include <thread>

#include <nlohmann/json.hpp>

namespace audit {

using nlohmann::json;

void ChatRequest::validate() const {
    if (user_turns.empty()) throw ValidationError("chat request needs at least one user turn");
    if (sampling.temperature < 0) throw ValidationError("temperature must be >= 0");
    if (sampling.top_p < 0) throw ValidationError("top_p must be >= 0");
}

namespace {

json request_to_json(const ChatRequest& req) {
    json j;
    j["system"] = req.system_text;
    j["user_turns"] = req.user_turns;
    j["temperature"] = req.sampling.temperature;
    j["top_p"] = req.sampling.top_p;
    j["model_tag"] = req.model_tag;
    return j;
}

}  // namespace

LlmGateway::LlmGateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
    if (!options_.cache_dir.empty()) {
        std::filesystem::create_directories(options_.cache_dir);
    }
}

std::string LlmGateway::request_key(const ChatRequest& req) const {
    json j = request_to_json(req);
    j["salt"] = options_.cache_salt;
    return content_key(j.dump());
}

ChatResponse LlmGateway::complete(const ChatRequest& req) {
    req.validate();

    std::filesystem::path cache_file;
    if (!options_.cache_dir.empty()) {
        cache_file = options_.cache_dir / (request_key(req) + ".json");
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (std::filesystem::exists(cache_file)) {
            json rec = json::parse(read_text_file(cache_file));
            ChatResponse resp;
            resp.text = rec.at("response").at("text").get<std::string>();
            resp.meta.backend_id = rec.at("response").value("backend_id", backend_->id());
            resp.meta.attempt_count = rec.at("response").value("attempt_count", 1);
            resp.meta.cached = true;
            return resp;
        }
    }

    ChatResponse resp;
    resp.meta.backend_id = backend_->id();
    int attempt = 0;
    for (;;) {
        ++attempt;
        try {
            resp.text = backend_->complete(req);
            resp.meta.attempt_count = attempt;
            break;
        } catch (const TransientBackendError& e) {
            if (attempt > options_.max_retries) {
                throw BackendError("backend exhausted after " + std::to_string(attempt) +
                                   " attempts: " + e.what());
            }
            auto delay = options_.backoff_base;
            for (int i = 1; i < attempt; ++i) {
                delay = std::chrono::milliseconds(
                    static_cast<long long>(static_cast<double>(delay.count()) * options_.backoff_factor));
            }
            if (delay.count() > 0) std::this_thread::sleep_for(delay);
        }
    }

    if (!cache_file.empty()) {
        json rec;
        rec["key"] = request_key(req);
        rec["request"] = request_to_json(req);
        rec["response"] = {{"text", resp.text},
                           {"backend_id", resp.meta.backend_id},
                           {"attempt_count", resp.meta.attempt_count}};
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (!std::filesystem::exists(cache_file)) {
            write_text_file_atomic(cache_file, rec.dump());
        }
    }
    return resp;
}

}  // namespace audit
