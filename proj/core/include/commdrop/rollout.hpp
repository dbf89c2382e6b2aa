#pragma once

#include <string>
#include <vector>

#include "commdrop/backend.hpp"
#include "commdrop/graph_sample.hpp"
#include "commdrop/task.hpp"
#include "commdrop/team.hpp"

namespace commdrop {

enum class AggregationMode { DecisionAgent, MajorityVote };

struct Message {
    std::string src_agent_id;
    int round_index = 1; // 1-based
    std::string content;
};

struct AgentOutput {
    std::string agent_id;
    int round_index = 1;
    std::string content;
};

struct RolloutRecord {
    std::string instance_id;
    std::vector<AgentOutput> outputs; // emission order
    std::string final_answer;
    double utility = 0.0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    double wall_time_ms = 0.0;
    bool usage_estimated = false; // any call in the rollout had estimated usage
};

// Thrown by run_rollout when no final-round node participated; carries what
// the rollout produced up to that point so callers can score it 0 without
// losing token accounting.
class EmptyFinalRoundError : public AggregationError {
public:
    EmptyFinalRoundError(const std::string& what, RolloutRecord partial)
        : AggregationError(what), partial_record(std::move(partial)) {}
    RolloutRecord partial_record;
};

// Deterministic prompt layout: the template's {query} placeholder becomes the
// question, {messages} becomes a context header line ("(round t of T)" for
// agents, "(final decision)" for the aggregator) followed by one block per
// incoming message, "Agent <role> (<id>) said: <content>", inter-round
// predecessors first, both groups in the sender round's execution order, or
// "(no incoming messages)" when there are none.
std::string render_prompt(const AgentProfile& profile, const std::string& query,
                          const std::string& context_header,
                          const std::vector<Message>& messages, const TeamSpec& team);

// Combines the final round's outputs into one answer.
//   DecisionAgent: the team's aggregator profile is called with the query and
//                  every final-round output; its reply is the answer.
//   MajorityVote:  modal extracted answer; ties go to the last output (in
//                  execution order) that carried an extractable answer.
// Throws AggregationError when `final_outputs` is empty.
std::string aggregate(const std::vector<Message>& final_outputs, AggregationMode mode,
                      AgentBackend& backend, const TaskInstance& instance,
                      const TeamSpec& team, const TaskKindSpec& kind,
                      RolloutRecord* accounting);

// Executes one task instance over a sampled graph: rounds in order, each
// round's participants in the sampled execution order, every agent fed the
// query plus the messages its sampled in-edges deliver. Nodes with no
// incident edge in their round are skipped entirely (no call, no tokens)
// unless they are their round's only node. Token totals and wall time are
// exact sums over the calls made. Throws AggregationError when the final
// round emits nothing, BackendError on backend failure.
RolloutRecord run_rollout(const GraphSample& sample, const TeamSpec& team,
                          AgentBackend& backend, const TaskInstance& instance,
                          const TaskKindSpec& kind, AggregationMode mode);

// Mean utility of `sample` over `instances`; rollouts run concurrently up to
// `parallelism` threads (<= 1 means serial). Utilities come from score() on
// each rollout's final answer. Rollout errors propagate.
double batch_utility(const GraphSample& sample, const TeamSpec& team, AgentBackend& backend,
                     const std::vector<TaskInstance>& instances, const TaskKindSpec& kind,
                     AggregationMode mode, int parallelism = 1);

} // namespace commdrop
