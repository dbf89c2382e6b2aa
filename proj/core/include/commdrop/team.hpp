#pragma once

#include <optional>
#include <string>
#include <vector>

#include "commdrop/errors.hpp"

namespace commdrop {

// Placeholders the rollout engine substitutes into prompt templates.
inline constexpr const char* kQueryPlaceholder = "{query}";
inline constexpr const char* kMessagesPlaceholder = "{messages}";

struct AgentProfile {
    std::string agent_id;
    std::string role_name;
    std::string prompt_template; // must contain {query} and {messages} exactly once each
    double temperature = 1.0;
};

enum class TopologyKind { FullyConnected, Layered, Random };

struct TopologyInit {
    TopologyKind kind = TopologyKind::FullyConnected;
    std::vector<int> layer_sizes;   // layered only; must sum to the team size
    double edge_probability = 0.5;  // random only
};

// Shipped role template. A placeholder prompt, not a tuned one; real
// deployments are expected to override it per role.
std::string default_prompt_template();

AgentProfile make_profile(std::string agent_id, std::string role_name);

// The decision agent used by decision_agent aggregation when a team does not
// configure its own aggregator.
AgentProfile default_aggregator_profile();

struct TeamSpec {
    std::vector<AgentProfile> agents;
    int rounds = 1;
    TopologyInit topology;
    std::optional<AgentProfile> aggregator;

    int size() const { return int(agents.size()); }

    const AgentProfile& aggregator_profile() const;
    const AgentProfile* find_agent(const std::string& agent_id) const;

    // Throws ConfigError: fewer than 2 agents, rounds < 1, duplicate ids,
    // malformed templates, layer sizes that do not sum to the team size, or
    // edge probability outside [0, 1].
    void validate() const;
};

inline int count_occurrences(const std::string& s, const std::string& needle) {
    if (needle.empty()) return 0;
    int n = 0;
    for (size_t pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size()))
        ++n;
    return n;
}

} // namespace commdrop
