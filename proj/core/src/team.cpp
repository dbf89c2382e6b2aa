#include "commdrop/team.hpp"

#include <numeric>
#include <unordered_set>

namespace commdrop {

std::string default_prompt_template() {
    // Placeholder template; tune per role for real deployments.
    return "Answer the question below. If other agents have spoken, weigh their "
           "input before answering.\n\nQuestion: {query}\n\n{messages}\n\n"
           "Give your final answer.";
}

AgentProfile make_profile(std::string agent_id, std::string role_name) {
    AgentProfile p;
    p.agent_id = std::move(agent_id);
    p.role_name = std::move(role_name);
    p.prompt_template = default_prompt_template();
    return p;
}

AgentProfile default_aggregator_profile() {
    AgentProfile p = make_profile("final-decision", "Final Decision");
    p.prompt_template =
        "The agents below have each answered the question. Combine their "
        "answers into one final answer.\n\nQuestion: {query}\n\n{messages}\n\n"
        "State the final answer.";
    return p;
}

const AgentProfile& TeamSpec::aggregator_profile() const {
    static const AgentProfile fallback = default_aggregator_profile();
    return aggregator ? *aggregator : fallback;
}

const AgentProfile* TeamSpec::find_agent(const std::string& agent_id) const {
    for (const auto& a : agents)
        if (a.agent_id == agent_id) return &a;
    return nullptr;
}

static void validate_profile(const AgentProfile& p, const char* what) {
    if (p.agent_id.empty()) throw ConfigError(std::string(what) + ": empty agent_id");
    if (count_occurrences(p.prompt_template, kQueryPlaceholder) != 1)
        throw ConfigError(std::string(what) + " '" + p.agent_id +
                          "': prompt_template must contain {query} exactly once");
    if (count_occurrences(p.prompt_template, kMessagesPlaceholder) != 1)
        throw ConfigError(std::string(what) + " '" + p.agent_id +
                          "': prompt_template must contain {messages} exactly once");
    if (p.temperature < 0.0)
        throw ConfigError(std::string(what) + " '" + p.agent_id + "': negative temperature");
}

void TeamSpec::validate() const {
    if (agents.size() < 2) throw ConfigError("team needs at least 2 agents");
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    std::unordered_set<std::string> ids;
    for (const auto& a : agents) {
        validate_profile(a, "agent");
        if (!ids.insert(a.agent_id).second)
            throw ConfigError("duplicate agent_id '" + a.agent_id + "'");
    }
    if (aggregator) {
        validate_profile(*aggregator, "aggregator");
        if (ids.count(aggregator->agent_id))
            throw ConfigError("aggregator agent_id collides with a team agent");
    }
    switch (topology.kind) {
    case TopologyKind::Layered: {
        if (topology.layer_sizes.empty())
            throw ConfigError("layered topology needs layer_sizes");
        int total = 0;
        for (int n : topology.layer_sizes) {
            if (n <= 0) throw ConfigError("layer sizes must be positive");
            total += n;
        }
        if (total != size())
            throw ConfigError("layer_sizes must sum to the team size");
        break;
    }
    case TopologyKind::Random:
        if (topology.edge_probability < 0.0 || topology.edge_probability > 1.0)
            throw ConfigError("edge_probability must lie in [0, 1]");
        break;
    case TopologyKind::FullyConnected:
        break;
    }
}

} // namespace commdrop
