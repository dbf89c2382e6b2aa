#include "commdrop/simulated_backend.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

#include "commdrop/rng.hpp"

namespace commdrop {

namespace {

constexpr const char* kSaidMarker = " said: ";

double unit_from_hash(uint64_t h) { return double(mix64(h) >> 11) * 0x1.0p-53; }

bool vote_is_correct(const std::string& extracted, const std::string& gold,
                     const TaskKindSpec& kind) {
    return score(extracted, gold, kind) == 1.0;
}

// Deterministic wrong answer, distinct from gold under score().
std::string wrong_answer(const std::string& gold, const TaskKindSpec& kind, uint64_t h) {
    switch (kind.kind) {
    case AnswerKind::MultipleChoice: {
        std::string options;
        char g = gold.empty() ? '?' : gold[0];
        for (char c : kind.letters)
            if (c != g) options.push_back(c);
        if (options.empty()) return "?";
        return std::string(1, options[mix64(h) % options.size()]);
    }
    case AnswerKind::Numeric: {
        char* end = nullptr;
        double g = std::strtod(gold.c_str(), &end);
        if (end == gold.c_str()) g = 0.0;
        double w = g + 1.0 + double(mix64(h) % 5);
        if (w == std::floor(w)) return std::to_string(long(w));
        return std::to_string(w);
    }
    case AnswerKind::ExactText:
        return "not " + gold;
    }
    return "?";
}

} // namespace

void SimulatedAgentSpec::validate() const {
    if (agent_id.empty()) throw ConfigError("simulated agent spec needs an agent_id");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(reliability)) throw ConfigError("reliability must lie in [0, 1]");
    if (!in01(strength)) throw ConfigError("strength must lie in [0, 1]");
    if (!in01(influence)) throw ConfigError("influence must lie in [0, 1]");
}

std::vector<std::string> parse_incoming_answers(const std::string& prompt,
                                                const TaskKindSpec& kind) {
    std::vector<std::string> answers;
    size_t pos = 0;
    while (true) {
        size_t line_start = prompt.find("Agent ", pos);
        if (line_start == std::string::npos) break;
        // Only message blocks count: the line must start at a line boundary
        // and contain the marker before its newline.
        if (line_start != 0 && prompt[line_start - 1] != '\n') {
            pos = line_start + 6;
            continue;
        }
        size_t line_end = prompt.find('\n', line_start);
        if (line_end == std::string::npos) line_end = prompt.size();
        size_t said = prompt.find(kSaidMarker, line_start);
        if (said != std::string::npos && said < line_end) {
            std::string content =
                prompt.substr(said + std::strlen(kSaidMarker), line_end - said - std::strlen(kSaidMarker));
            std::string extracted = extract_answer(content, kind);
            if (extracted != kNoAnswer) answers.push_back(extracted);
        }
        pos = line_end;
        if (pos >= prompt.size()) break;
    }
    return answers;
}

SimulatedBackend::SimulatedBackend(std::vector<SimulatedAgentSpec> specs,
                                   std::vector<TaskInstance> instances, TaskKindSpec kind,
                                   uint64_t seed)
    : instances_(std::move(instances)), kind_(std::move(kind)), seed_(seed) {
    for (auto& s : specs) {
        s.validate();
        if (!specs_.emplace(s.agent_id, s).second)
            throw ConfigError("duplicate simulated agent spec '" + s.agent_id + "'");
    }
    if (specs_.empty()) throw ConfigError("simulated backend needs at least one agent spec");
}

void SimulatedBackend::set_instances(std::vector<TaskInstance> instances) {
    instances_ = std::move(instances);
}

const SimulatedAgentSpec& SimulatedBackend::spec_for(const std::string& agent_id) const {
    auto it = specs_.find(agent_id);
    if (it == specs_.end())
        throw BackendError("simulated backend has no behavior for agent '" + agent_id + "'");
    return it->second;
}

const TaskInstance* SimulatedBackend::match_instance(const std::string& prompt) const {
    for (const auto& inst : instances_)
        if (!inst.question.empty() && prompt.find(inst.question) != std::string::npos)
            return &inst;
    return nullptr;
}

AgentReply SimulatedBackend::call_agent(const AgentProfile& profile,
                                        const std::string& rendered_prompt) {
    const SimulatedAgentSpec& spec = spec_for(profile.agent_id);

    std::string content;
    switch (spec.behavior) {
    case SimBehavior::Constant:
        content = spec.text;
        break;
    case SimBehavior::Echo: {
        auto answers = parse_incoming_answers(rendered_prompt, kind_);
        if (answers.empty()) {
            content = "None.";
        } else {
            // Modal answer; ties resolved toward the lexicographically
            // smallest so the behavior is deterministic.
            std::string best;
            int best_count = 0;
            for (const auto& a : answers) {
                int n = 0;
                for (const auto& b : answers) n += a == b;
                if (n > best_count || (n == best_count && (best.empty() || a < best))) {
                    best = a;
                    best_count = n;
                }
            }
            content = best;
        }
        break;
    }
    case SimBehavior::Oracle:
    case SimBehavior::Saboteur: {
        const TaskInstance* inst = match_instance(rendered_prompt);
        if (!inst)
            throw BackendError("simulated backend: prompt matches no known question (agent '" +
                               profile.agent_id + "')");
        double base = spec.behavior == SimBehavior::Oracle ? spec.reliability : 1.0 - spec.strength;
        double p_correct = base;
        auto answers = parse_incoming_answers(rendered_prompt, kind_);
        if (!answers.empty()) {
            int correct = 0;
            for (const auto& a : answers) correct += vote_is_correct(a, inst->answer, kind_);
            int wrong = int(answers.size()) - correct;
            double m = correct > wrong ? 1.0 : (correct < wrong ? 0.0 : 0.5);
            p_correct = base * (1.0 - spec.influence) + spec.influence * m;
        }
        uint64_t h = hash_combine(hash_combine(mix64(seed_), hash_str(profile.agent_id)),
                                  hash_str(rendered_prompt));
        bool correct = unit_from_hash(h) < p_correct;
        content = correct ? inst->answer
                          : wrong_answer(inst->answer, kind_, hash_combine(h, hash_str("wrong")));
        break;
    }
    }

    AgentReply reply;
    reply.content = content;
    reply.usage.prompt_tokens = estimate_tokens(rendered_prompt);
    reply.usage.completion_tokens = estimate_tokens(content);
    reply.usage.estimated = false;
    reply.latency_ms = double(reply.usage.prompt_tokens + reply.usage.completion_tokens);
    return reply;
}

} // namespace commdrop
