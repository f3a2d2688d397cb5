#pragma once

#include <string>

#include "audit/llm_gateway.hpp"

namespace audit {

/// Deterministic offline backend. Every response is a pure function of
/// (script seed, full request content): the request class is recognized from
/// prompt markers and a seeded generator emits a well-formed reply for it.
/// A nonzero malformed_rate makes the same deterministic fraction of replies
/// violate the expected format, for exercising the callers' repair loops.
struct MockScript {
    uint64_t seed = 0;
    double malformed_rate = 0.0;
};

class MockBackend : public ChatBackend {
public:
    explicit MockBackend(MockScript script) : script_(script) {}

    std::string id() const override { return "mock"; }
    std::string complete(const ChatRequest& req) override;

    enum class RequestClass { PersonaGen, IwIndicators, WvbDemographics, WvbQuestion, Mfq };
    static RequestClass classify(const ChatRequest& req);

private:
    MockScript script_;
};

}  // namespace audit
