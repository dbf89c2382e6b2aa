#pragma once

#include <memory>
#include <string>

#include "commdrop/backend.hpp"

namespace commdrop {

struct HttpBackendConfig {
    std::string base_url;        // e.g. "https://api.openai.com" or "http://127.0.0.1:8080"
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key;         // resolved credential; empty sends no Authorization header
    double timeout_seconds = 120.0;
    int max_attempts = 3;        // total tries per call
    double initial_backoff_seconds = 1.0; // doubles per retry
    int max_inflight = 4;        // concurrent requests cap
    int requests_per_minute = 0; // 0 disables rate limiting
    std::string extra_fields_json = ""; // opt-in extra body fields, a JSON object
};

// OpenAI-compatible chat-completions client. Each call POSTs exactly
// {model, messages, temperature} (plus configured extra fields) with the
// profile's role as the system message and the rendered prompt as the user
// message. Retries transport failures and retryable statuses (408, 429, 5xx)
// with exponential backoff; other failures, or exhaustion, raise BackendError
// carrying the last HTTP status. Missing usage in the response is estimated
// as ceil(len/4) and flagged on the reply.
class HttpBackend : public AgentBackend {
public:
    explicit HttpBackend(HttpBackendConfig cfg);
    ~HttpBackend() override;

    AgentReply call_agent(const AgentProfile& profile,
                          const std::string& rendered_prompt) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace commdrop
