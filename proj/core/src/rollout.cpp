#include "commdrop/rollout.hpp"

#include <algorithm>
#include <unordered_map>

#include "parallel.hpp"

namespace commdrop {

namespace {

std::string replace_once(std::string text, const std::string& placeholder,
                         const std::string& value) {
    size_t pos = text.find(placeholder);
    if (pos != std::string::npos) text.replace(pos, placeholder.size(), value);
    return text;
}

} // namespace

std::string render_prompt(const AgentProfile& profile, const std::string& query,
                          const std::string& context_header,
                          const std::vector<Message>& messages, const TeamSpec& team) {
    std::string block = context_header;
    if (messages.empty()) {
        block += "\n(no incoming messages)";
    } else {
        for (const auto& m : messages) {
            const AgentProfile* sender = team.find_agent(m.src_agent_id);
            std::string role = sender ? sender->role_name : m.src_agent_id;
            block += "\nAgent " + role + " (" + m.src_agent_id + ") said: " + m.content;
        }
    }
    std::string prompt = replace_once(profile.prompt_template, kQueryPlaceholder, query);
    return replace_once(std::move(prompt), kMessagesPlaceholder, block);
}

std::string aggregate(const std::vector<Message>& final_outputs, AggregationMode mode,
                      AgentBackend& backend, const TaskInstance& instance,
                      const TeamSpec& team, const TaskKindSpec& kind,
                      RolloutRecord* accounting) {
    if (final_outputs.empty())
        throw AggregationError("no final-round output to aggregate for instance '" +
                               instance.id + "'");
    if (mode == AggregationMode::DecisionAgent) {
        const AgentProfile& agg = team.aggregator_profile();
        std::string prompt =
            render_prompt(agg, instance.question, "(final decision)", final_outputs, team);
        AgentReply reply = backend.call_agent(agg, prompt);
        if (accounting != nullptr) {
            accounting->outputs.push_back(
                {agg.agent_id, final_outputs.back().round_index, reply.content});
            accounting->prompt_tokens += reply.usage.prompt_tokens;
            accounting->completion_tokens += reply.usage.completion_tokens;
            accounting->wall_time_ms += reply.latency_ms;
            accounting->usage_estimated |= reply.usage.estimated;
        }
        return reply.content;
    }

    // Majority vote over extractable answers; ties go to the last extractable
    // output in execution order.
    std::vector<std::string> votes;
    std::string last_extractable;
    for (const auto& m : final_outputs) {
        std::string a = extract_answer(m.content, kind);
        if (a != kNoAnswer) {
            votes.push_back(a);
            last_extractable = a;
        }
    }
    if (votes.empty()) return kNoAnswer;
    std::string best;
    int best_count = 0;
    bool tied = false;
    for (const auto& v : votes) {
        int n = int(std::count(votes.begin(), votes.end(), v));
        if (n > best_count) {
            best = v;
            best_count = n;
            tied = false;
        } else if (n == best_count && v != best) {
            tied = true;
        }
    }
    return tied ? last_extractable : best;
}

RolloutRecord run_rollout(const GraphSample& sample, const TeamSpec& team,
                          AgentBackend& backend, const TaskInstance& instance,
                          const TaskKindSpec& kind, AggregationMode mode) {
    int T = sample.rounds();
    auto part = participating_cells(sample);

    RolloutRecord record;
    record.instance_id = instance.id;

    // contents[t][i]: what node i said in round t; empty slots for skipped
    // nodes are never read because no edge leaves a skipped node.
    std::vector<std::vector<std::string>> contents(T);
    for (int t = 0; t < T; ++t) contents[t].resize(sample.round_node_ids[t].size());

    for (int t = 0; t < T; ++t) {
        std::vector<int> pos(sample.round_node_ids[t].size());
        for (int a = 0; a < int(pos.size()); ++a) pos[sample.topo_order[t][a]] = a;

        for (int idx : sample.topo_order[t]) {
            if (!part[t][idx]) continue;
            const std::string& agent_id = sample.round_node_ids[t][idx];
            const AgentProfile* profile = team.find_agent(agent_id);
            if (profile == nullptr)
                throw ContractError("sample node '" + agent_id + "' is not a team agent");

            std::vector<Message> incoming;
            if (t > 0) {
                std::vector<std::pair<int, int>> in; // (sender topo pos in t-1, sender idx)
                std::vector<int> prev_pos(sample.round_node_ids[t - 1].size());
                for (int a = 0; a < int(prev_pos.size()); ++a)
                    prev_pos[sample.topo_order[t - 1][a]] = a;
                for (auto [src, dst] : sample.inter_edges[t - 1])
                    if (dst == idx) in.emplace_back(prev_pos[src], src);
                std::sort(in.begin(), in.end());
                for (auto [_, src] : in)
                    incoming.push_back({sample.round_node_ids[t - 1][src], t, contents[t - 1][src]});
            }
            {
                std::vector<std::pair<int, int>> in;
                for (auto [src, dst] : sample.intra_edges[t])
                    if (dst == idx) in.emplace_back(pos[src], src);
                std::sort(in.begin(), in.end());
                for (auto [_, src] : in)
                    incoming.push_back({sample.round_node_ids[t][src], t + 1, contents[t][src]});
            }

            std::string header =
                "(round " + std::to_string(t + 1) + " of " + std::to_string(T) + ")";
            std::string prompt = render_prompt(*profile, instance.question, header, incoming, team);
            AgentReply reply = backend.call_agent(*profile, prompt);

            contents[t][idx] = reply.content;
            record.outputs.push_back({agent_id, t + 1, reply.content});
            record.prompt_tokens += reply.usage.prompt_tokens;
            record.completion_tokens += reply.usage.completion_tokens;
            record.wall_time_ms += reply.latency_ms;
            record.usage_estimated |= reply.usage.estimated;
        }
    }

    std::vector<Message> final_outputs;
    for (int idx : sample.topo_order[T - 1])
        if (part[T - 1][idx])
            final_outputs.push_back({sample.round_node_ids[T - 1][idx], T, contents[T - 1][idx]});
    if (final_outputs.empty()) {
        record.final_answer = kNoAnswer;
        throw EmptyFinalRoundError(
            "no final-round output to aggregate for instance '" + instance.id + "'", record);
    }

    record.final_answer = aggregate(final_outputs, mode, backend, instance, team, kind, &record);
    record.utility = score(extract_answer(record.final_answer, kind), instance.answer, kind);
    return record;
}

double batch_utility(const GraphSample& sample, const TeamSpec& team, AgentBackend& backend,
                     const std::vector<TaskInstance>& instances, const TaskKindSpec& kind,
                     AggregationMode mode, int parallelism) {
    if (instances.empty()) throw ContractError("batch_utility needs at least one instance");
    std::vector<double> utilities(instances.size(), 0.0);
    parallel_for(int(instances.size()), parallelism, [&](int i) {
        utilities[i] = run_rollout(sample, team, backend, instances[i], kind, mode).utility;
    });
    double sum = 0.0;
    for (double u : utilities) sum += u;
    return sum / double(utilities.size());
}

} // namespace commdrop
