#include "commdrop/train.hpp"

#include <cmath>

#include "commdrop/nuclear.hpp"
#include "commdrop/rng.hpp"
#include "parallel.hpp"

namespace commdrop {

void TrainConfig::validate() const {
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (samples_per_step < 1) throw ConfigError("samples_per_step must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (node_dropout_rate < 0.0 || node_dropout_rate >= 1.0)
        throw ConfigError("node_dropout_rate must lie in [0, 1)");
    if (edge_dropout_rate < 0.0 || edge_dropout_rate >= 1.0)
        throw ConfigError("edge_dropout_rate must lie in [0, 1)");
    if (nuclear_coefficient < 0.0) throw ConfigError("nuclear_coefficient must be >= 0");
}

GradientSet estimate_policy_gradient(const AdjacencySet& adj,
                                     const std::vector<ScoredSample>& batch,
                                     GradientTarget target, const TrainConfig& cfg) {
    if (batch.empty()) throw ContractError("gradient estimate needs at least one sample");
    for (const auto& s : batch)
        if (s.utility < 0.0 || s.utility > 1.0)
            throw ContractError("utilities must lie in [0, 1]");

    GradientSet g;
    for (const auto& m : adj.intra) g.intra.emplace_back(m.rows, m.cols, 0.0);
    for (const auto& m : adj.inter) g.inter.emplace_back(m.rows, m.cols, 0.0);

    double baseline = 0.0;
    if (cfg.baseline == Baseline::BatchMean) {
        for (const auto& s : batch) baseline += s.utility;
        baseline /= double(batch.size());
    }

    int T = adj.rounds();
    for (const auto& scored : batch) {
        const GraphSample& s = scored.sample;
        double adv = scored.utility - baseline;
        if (s.rounds() != T) throw ContractError("sample round count does not match adjacency");

        for (int t = 0; t < T; ++t) {
            for (auto [i, j] : s.intra_edges[t]) {
                if (!adj.intra_mask[t](i, j))
                    throw ContractError("sampled intra edge is not a trainable pair");
                g.intra[t](i, j) += adv / adj.intra[t](i, j);
            }
            if (cfg.likelihood == LikelihoodMode::Bernoulli) {
                int n = adj.node_count(t);
                for (int a = 0; a < n; ++a)
                    for (int b = a + 1; b < n; ++b) {
                        int i = s.topo_order[t][a], j = s.topo_order[t][b];
                        if (!adj.intra_mask[t](i, j)) continue;
                        if (!s.has_intra_edge(t, i, j))
                            g.intra[t](i, j) -= adv / (1.0 - adj.intra[t](i, j));
                    }
            }
        }
        if (target == GradientTarget::IntraAndInter) {
            for (int t = 0; t + 1 < T; ++t) {
                for (auto [i, j] : s.inter_edges[t]) {
                    if (!adj.inter_mask[t](i, j))
                        throw ContractError("sampled inter edge is not a trainable pair");
                    g.inter[t](i, j) += adv / adj.inter[t](i, j);
                }
                if (cfg.likelihood == LikelihoodMode::Bernoulli) {
                    for (int i = 0; i < adj.inter[t].rows; ++i)
                        for (int j = 0; j < adj.inter[t].cols; ++j)
                            if (adj.inter_mask[t](i, j) && !s.has_inter_edge(t, i, j))
                                g.inter[t](i, j) -= adv / (1.0 - adj.inter[t](i, j));
                }
            }
        }
    }

    double scale = 1.0 / double(batch.size());
    for (auto& m : g.intra)
        for (double& v : m.data) v *= scale;
    for (auto& m : g.inter)
        for (double& v : m.data) v *= scale;
    return g;
}

AdjacencySet train_matrices(AdjacencySet adj, const UtilityEvaluator& evaluate,
                            const TrainConfig& cfg, GradientTarget target, bool regularize,
                            const std::string& stage_label, const StepSink& sink) {
    cfg.validate();
    adj.validate();
    uint64_t stage_seed = derive_seed(cfg.seed, {hash_str(stage_label)});

    for (int step = 1; step <= cfg.steps; ++step) {
        std::vector<ScoredSample> batch(cfg.samples_per_step);
        double wall = 0.0;
        for (int m = 0; m < cfg.samples_per_step; ++m) {
            uint64_t sample_seed = derive_seed(stage_seed, {uint64_t(step), uint64_t(m)});
            batch[m].sample = dag_sample(adj, sample_seed, cfg.likelihood);
            SampleScore score = evaluate(batch[m].sample, step, m);
            batch[m].utility = score.utility;
            wall += score.wall_time_ms;
        }

        GradientSet g = estimate_policy_gradient(adj, batch, target, cfg);
        for (size_t t = 0; t < adj.intra.size(); ++t)
            for (size_t k = 0; k < adj.intra[t].data.size(); ++k)
                adj.intra[t].data[k] += cfg.learning_rate * g.intra[t].data[k];
        if (target == GradientTarget::IntraAndInter)
            for (size_t t = 0; t < adj.inter.size(); ++t)
                for (size_t k = 0; k < adj.inter[t].data.size(); ++k)
                    adj.inter[t].data[k] += cfg.learning_rate * g.inter[t].data[k];

        if (regularize && cfg.nuclear_coefficient > 0.0) {
            auto descend = [&](Matrix& w, const BoolMatrix& mask) {
                Matrix sub = nuclear_subgradient(w);
                for (int i = 0; i < w.rows; ++i)
                    for (int j = 0; j < w.cols; ++j)
                        if (mask(i, j))
                            w(i, j) -= cfg.learning_rate * cfg.nuclear_coefficient * sub(i, j);
            };
            for (size_t t = 0; t < adj.intra.size(); ++t)
                descend(adj.intra[t], adj.intra_mask[t]);
            if (target == GradientTarget::IntraAndInter)
                for (size_t t = 0; t < adj.inter.size(); ++t)
                    descend(adj.inter[t], adj.inter_mask[t]);
        }

        clip_trainable(adj);

        if (sink) {
            StepStats stats;
            stats.step = step;
            stats.stage = stage_label;
            double sum = 0.0;
            for (const auto& s : batch) sum += s.utility;
            stats.mean_utility = sum / double(batch.size());
            for (const auto& m : adj.intra) stats.intra_nuclear_norms.push_back(nuclear_norm(m));
            for (const auto& m : adj.inter) stats.inter_nuclear_norms.push_back(nuclear_norm(m));
            stats.wall_time_ms = wall;
            sink(stats);
        }
    }
    return adj;
}

UtilityEvaluator make_rollout_evaluator(const TeamSpec& team, AgentBackend& backend,
                                        const std::vector<TaskInstance>& instances,
                                        const TaskKindSpec& kind, AggregationMode mode,
                                        int parallelism) {
    if (instances.empty()) throw ConfigError("training needs at least one instance");
    return [&team, &backend, instances, kind, mode, parallelism](const GraphSample& sample, int,
                                                                 int) -> SampleScore {
        std::vector<double> utilities(instances.size(), 0.0);
        std::vector<double> walls(instances.size(), 0.0);
        parallel_for(int(instances.size()), parallelism, [&](int i) {
            try {
                RolloutRecord rec = run_rollout(sample, team, backend, instances[i], kind, mode);
                utilities[i] = rec.utility;
                walls[i] = rec.wall_time_ms;
            } catch (const EmptyFinalRoundError& e) {
                // A graph that produces no answer earns zero utility; that is
                // signal, not a reason to abort training.
                utilities[i] = 0.0;
                walls[i] = e.partial_record.wall_time_ms;
            }
        });
        SampleScore out;
        for (size_t i = 0; i < instances.size(); ++i) {
            out.utility += utilities[i];
            out.wall_time_ms += walls[i];
        }
        out.utility /= double(instances.size());
        return out;
    };
}

AdjacencySet train_matrices(AdjacencySet adj, const TeamSpec& team, AgentBackend& backend,
                            const std::vector<TaskInstance>& instances, const TaskKindSpec& kind,
                            AggregationMode mode, const TrainConfig& cfg, GradientTarget target,
                            bool regularize, const std::string& stage_label, const StepSink& sink,
                            int parallelism) {
    UtilityEvaluator evaluate =
        make_rollout_evaluator(team, backend, instances, kind, mode, parallelism);
    return train_matrices(std::move(adj), evaluate, cfg, target, regularize, stage_label, sink);
}

} // namespace commdrop
