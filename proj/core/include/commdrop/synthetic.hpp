#pragma once

#include <memory>
#include <vector>

#include "commdrop/graph_sample.hpp"
#include "commdrop/simulated_backend.hpp"
#include "commdrop/task.hpp"
#include "commdrop/team.hpp"

namespace commdrop {

// A synthetic benchmark with known answers and scripted agents. Instances
// carry gold letters drawn uniformly from `letters`; `agent_specs` must cover
// every team agent (and the aggregator for decision-agent aggregation).
struct SyntheticTaskSpec {
    std::vector<SimulatedAgentSpec> agent_specs;
    std::string letters = "AB";
    int instance_count = 40;

    void validate() const;
};

struct PlantedTask {
    std::vector<TaskInstance> instances;
    std::shared_ptr<SimulatedBackend> backend;
    TaskKindSpec kind;
};

// Builds the instance set and its paired deterministic backend. Question
// texts embed the instance id so every prompt is unique; gold answers are
// seed-drawn letters.
PlantedTask make_planted_task(const SyntheticTaskSpec& spec, uint64_t seed);

// Exact expected utility of a concrete sampled graph under decision-agent
// aggregation with a majority-following aggregator: enumerates the joint
// correctness distribution of every participating (agent, round) cell in
// topological order. Cell indices follow sample.round_node_ids, and
// agent_specs[t-th round][i] is looked up by node id.
//
// Only Oracle/Saboteur behaviors are supported (their downstream effect
// depends only on correctness, which keeps the enumeration exact for any
// letter count), and the graph must satisfy N <= 6, T <= 2; anything else
// throws OversizeError/ContractError. This is the reference the Monte-Carlo
// rollout path is tested against.
double expected_utility(const SyntheticTaskSpec& spec, const GraphSample& sample);

} // namespace commdrop
