#include "commdrop/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "commdrop/rng.hpp"

namespace commdrop {

void SyntheticTaskSpec::validate() const {
    if (letters.size() < 2) throw ConfigError("synthetic task needs at least 2 answer letters");
    std::unordered_set<char> seen_letters;
    for (char c : letters) {
        if (!std::isupper(static_cast<unsigned char>(c)))
            throw ConfigError("answer letters must be uppercase");
        if (!seen_letters.insert(c).second) throw ConfigError("duplicate answer letter");
    }
    if (instance_count < 1) throw ConfigError("instance_count must be >= 1");
    if (agent_specs.empty()) throw ConfigError("synthetic task needs agent specs");
    std::unordered_set<std::string> ids;
    for (const auto& s : agent_specs) {
        s.validate();
        if (!ids.insert(s.agent_id).second)
            throw ConfigError("duplicate agent spec '" + s.agent_id + "'");
    }
}

PlantedTask make_planted_task(const SyntheticTaskSpec& spec, uint64_t seed) {
    spec.validate();

    PlantedTask task;
    task.kind.kind = AnswerKind::MultipleChoice;
    task.kind.letters = spec.letters;

    Rng rng(derive_seed(seed, {hash_str("planted-task")}));
    for (int k = 0; k < spec.instance_count; ++k) {
        TaskInstance inst;
        inst.id = "synth-" + std::to_string(k + 1);
        char gold = spec.letters[rng.next_below(uint32_t(spec.letters.size()))];
        std::string options;
        for (char c : spec.letters) {
            if (!options.empty()) options += ", ";
            options.push_back(c);
        }
        inst.question = "Synthetic instance #" + std::to_string(k + 1) +
                        ": choose the correct option among {" + options + "}.";
        inst.answer = std::string(1, gold);
        task.instances.push_back(std::move(inst));
    }

    // Decision-agent aggregation needs a behavior for the aggregator; default
    // to a pure majority follower when the spec does not name one.
    auto specs = spec.agent_specs;
    std::string agg_id = default_aggregator_profile().agent_id;
    bool has_agg = std::any_of(specs.begin(), specs.end(),
                               [&](const SimulatedAgentSpec& s) { return s.agent_id == agg_id; });
    if (!has_agg) {
        SimulatedAgentSpec agg;
        agg.agent_id = agg_id;
        agg.behavior = SimBehavior::Oracle;
        agg.reliability = 0.5;
        agg.influence = 1.0;
        specs.push_back(agg);
    }

    task.backend = std::make_shared<SimulatedBackend>(
        std::move(specs), task.instances, task.kind, derive_seed(seed, {hash_str("backend")}));
    return task;
}

namespace {

struct CellRef {
    int round;
    int node;
};

double majority_term(int correct, int wrong) {
    if (correct > wrong) return 1.0;
    if (correct < wrong) return 0.0;
    return 0.5;
}

} // namespace

double expected_utility(const SyntheticTaskSpec& spec, const GraphSample& sample) {
    int T = sample.rounds();
    if (T > 2) throw OversizeError("closed-form utility is enumerable only for T <= 2");
    for (int t = 0; t < T; ++t)
        if (sample.round_node_ids[t].size() > 6)
            throw OversizeError("closed-form utility is enumerable only for N <= 6");

    std::unordered_map<std::string, const SimulatedAgentSpec*> by_id;
    for (const auto& s : spec.agent_specs) by_id[s.agent_id] = &s;

    auto part = participating_cells(sample);

    // Participating cells in execution order; their inputs always precede
    // them (intra predecessors earlier in topo order, inter predecessors in
    // the previous round), so one left-to-right pass assigns every bit after
    // its dependencies.
    std::vector<CellRef> cells;
    std::vector<std::vector<int>> cell_index(T);
    for (int t = 0; t < T; ++t) {
        cell_index[t].assign(sample.round_node_ids[t].size(), -1);
        for (int idx : sample.topo_order[t]) {
            if (!part[t][idx]) continue;
            cell_index[t][idx] = int(cells.size());
            cells.push_back({t, idx});
        }
    }
    if (cells.size() > 12)
        throw OversizeError("closed-form utility is enumerable only up to 12 cells");

    std::vector<const SimulatedAgentSpec*> cell_spec(cells.size());
    std::vector<std::vector<int>> cell_inputs(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
        auto [t, i] = cells[c];
        auto it = by_id.find(sample.round_node_ids[t][i]);
        if (it == by_id.end())
            throw ContractError("no agent spec for node '" + sample.round_node_ids[t][i] + "'");
        if (it->second->behavior != SimBehavior::Oracle &&
            it->second->behavior != SimBehavior::Saboteur)
            throw ContractError("closed-form utility supports oracle/saboteur behaviors only");
        cell_spec[c] = it->second;
        for (auto [src, dst] : sample.intra_edges[t])
            if (dst == i) cell_inputs[c].push_back(cell_index[t][src]);
        if (t > 0)
            for (auto [src, dst] : sample.inter_edges[t - 1])
                if (dst == i) cell_inputs[c].push_back(cell_index[t - 1][src]);
    }

    std::vector<int> final_cells;
    for (size_t c = 0; c < cells.size(); ++c)
        if (cells[c].round == T - 1) final_cells.push_back(int(c));
    // An empty final round yields no answer; the run scores 0.
    if (final_cells.empty()) return 0.0;

    double utility = 0.0;
    size_t patterns = size_t(1) << cells.size();
    for (size_t bits = 0; bits < patterns; ++bits) {
        double p = 1.0;
        for (size_t c = 0; c < cells.size() && p > 0.0; ++c) {
            const SimulatedAgentSpec& s = *cell_spec[c];
            double base =
                s.behavior == SimBehavior::Oracle ? s.reliability : 1.0 - s.strength;
            double p_correct = base;
            if (!cell_inputs[c].empty()) {
                int correct = 0;
                for (int in : cell_inputs[c]) correct += (bits >> in) & 1;
                int wrong = int(cell_inputs[c].size()) - correct;
                p_correct = base * (1.0 - s.influence) +
                            s.influence * majority_term(correct, wrong);
            }
            p *= ((bits >> c) & 1) ? p_correct : 1.0 - p_correct;
        }
        if (p == 0.0) continue;
        int correct = 0;
        for (int c : final_cells) correct += (bits >> c) & 1;
        int wrong = int(final_cells.size()) - correct;
        utility += p * majority_term(correct, wrong);
    }
    return utility;
}

} // namespace commdrop
