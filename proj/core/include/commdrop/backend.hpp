#pragma once

#include <string>
#include <string_view>

#include "commdrop/team.hpp"

namespace commdrop {

struct BackendUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    bool estimated = false; // true when the provider reported no usage
};

struct AgentReply {
    std::string content;
    BackendUsage usage;
    // Reported by the backend so records stay reproducible: simulated
    // backends derive it from token counts, HTTP backends measure it.
    double latency_ms = 0.0;
};

// ceil(len/4): the crude estimate used when a backend reports no usage, and
// the exact accounting rule of the simulated backend.
inline long estimate_tokens(std::string_view text) {
    return long((text.size() + 3) / 4);
}

class AgentBackend {
public:
    virtual ~AgentBackend() = default;

    // Must be safe to call from multiple threads at once. Throws BackendError
    // after exhausting retries.
    virtual AgentReply call_agent(const AgentProfile& profile,
                                  const std::string& rendered_prompt) = 0;
};

} // namespace commdrop
