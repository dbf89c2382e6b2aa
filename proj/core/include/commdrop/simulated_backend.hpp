#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "commdrop/backend.hpp"
#include "commdrop/task.hpp"

namespace commdrop {

// Scripted behaviors for offline runs:
//   Oracle:   answers correctly with probability `reliability`, blended with
//             what it hears (see below);
//   Saboteur: answers correctly with probability 1 - `strength`, blended the
//             same way;
//   Echo:     repeats the majority incoming answer, "None." when it heard
//             nothing extractable;
//   Constant: emits `text` verbatim.
//
// Blending: when an agent has extractable incoming answers, its probability
// of answering correctly is base * (1 - influence) + influence * m, where
// base is reliability (oracle) or 1 - strength (saboteur) and m is 1 when
// correct answers outnumber wrong ones among its inputs, 0 when outnumbered,
// 0.5 on a tie. With no inputs the probability is base alone.
enum class SimBehavior { Oracle, Saboteur, Echo, Constant };

struct SimulatedAgentSpec {
    std::string agent_id;
    SimBehavior behavior = SimBehavior::Oracle;
    double reliability = 1.0; // Oracle
    double strength = 1.0;    // Saboteur
    std::string text;         // Constant
    double influence = 0.0;   // weight of incoming answers, in [0, 1]

    void validate() const; // throws ConfigError on out-of-range parameters
};

// Deterministic stand-in for a model API. Every decision is a pure function
// of (agent spec, rendered prompt, seed): the prompt is parsed back into the
// question (matched against the known instances) and the incoming message
// blocks, and correctness is drawn from a hash of (seed, agent_id, prompt).
// Identical inputs therefore produce identical replies, across threads and
// runs. Token usage is exact: ceil(len/4) on each side.
class SimulatedBackend : public AgentBackend {
public:
    SimulatedBackend(std::vector<SimulatedAgentSpec> specs, std::vector<TaskInstance> instances,
                     TaskKindSpec kind, uint64_t seed);

    AgentReply call_agent(const AgentProfile& profile,
                          const std::string& rendered_prompt) override;

    // Replaces the instance pool (e.g. switching from train to eval split).
    void set_instances(std::vector<TaskInstance> instances);

    const TaskKindSpec& kind() const { return kind_; }
    uint64_t seed() const { return seed_; }

private:
    const SimulatedAgentSpec& spec_for(const std::string& agent_id) const;
    const TaskInstance* match_instance(const std::string& prompt) const;

    std::unordered_map<std::string, SimulatedAgentSpec> specs_;
    std::vector<TaskInstance> instances_;
    TaskKindSpec kind_;
    uint64_t seed_;
};

// Incoming answers recovered from the engine's message blocks in `prompt`.
// Exposed for the closed-form utility reference, which must agree with what
// the backend actually sees.
std::vector<std::string> parse_incoming_answers(const std::string& prompt,
                                                const TaskKindSpec& kind);

} // namespace commdrop
