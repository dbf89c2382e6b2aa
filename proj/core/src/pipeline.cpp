#include "commdrop/pipeline.hpp"

#include <cstdio>

namespace commdrop {

namespace {

struct StageRunner {
    const PipelineHooks& hooks;
    std::string last_checkpoint;

    std::string checkpoint(const std::string& label, const AdjacencySet& adj) {
        if (hooks.checkpoint_sink) last_checkpoint = hooks.checkpoint_sink(label, adj);
        return last_checkpoint;
    }

    void log(const std::string& line) {
        if (hooks.stage_log) hooks.stage_log(line);
    }

    template <typename Fn>
    auto run(const std::string& label, Fn&& fn) {
        try {
            return fn();
        } catch (const BackendError& e) {
            // Keep the type so callers still classify this as a backend
            // failure, but name the stage and where to resume from.
            throw BackendError("stage '" + label + "': " + e.what() +
                                   (last_checkpoint.empty() ? ""
                                                            : " (resume from " + last_checkpoint + ")"),
                               e.status());
        } catch (const PipelineError&) {
            throw;
        } catch (const std::exception& e) {
            throw PipelineError(label, e.what(), last_checkpoint);
        }
    }
};

std::string utility_summary(const std::vector<StepStats>& steps) {
    if (steps.empty()) return "no training steps";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d steps, last mean utility %.4f", int(steps.size()),
                  steps.back().mean_utility);
    return buf;
}

} // namespace

DropoutPlan run_pipeline(const TeamSpec& team, const UtilityEvaluator& evaluate,
                         const TrainConfig& cfg, InterShape inter_shape, TrainStrategy strategy,
                         const PipelineHooks& hooks) {
    cfg.validate();
    StageRunner runner{hooks, ""};

    AdjacencySet adj = runner.run(stage::kInit, [&] {
        return init_adjacency(team, inter_shape, cfg.seed);
    });
    runner.checkpoint(stage::kInit, adj);

    auto train_stage = [&](AdjacencySet cur, const char* label, GradientTarget target,
                           bool regularize) {
        std::vector<StepStats> steps;
        StepSink sink = [&](const StepStats& s) {
            steps.push_back(s);
            if (hooks.step_sink) hooks.step_sink(s);
        };
        AdjacencySet next = runner.run(label, [&] {
            return train_matrices(std::move(cur), evaluate, cfg, target, regularize, label, sink);
        });
        runner.checkpoint(label, next);
        runner.log(std::string(label) + ": " + utility_summary(steps));
        return next;
    };

    DropoutPlan plan;
    if (strategy == TrainStrategy::TwoStage) {
        adj = train_stage(std::move(adj), stage::kTrainIntra, GradientTarget::IntraOnly, false);

        NodeDropoutResult nd = runner.run(stage::kNodeDropout, [&] {
            return node_dropout(adj, cfg.node_dropout_rate);
        });
        plan.dropped_nodes = nd.dropped;
        runner.checkpoint(stage::kNodeDropout, nd.adj);
        int dropped_total = 0;
        for (const auto& r : nd.dropped) dropped_total += int(r.size());
        runner.log(std::string(stage::kNodeDropout) + ": dropped " +
                   std::to_string(dropped_total) + " node slots across " +
                   std::to_string(nd.dropped.size()) + " rounds");

        // Survivors restart from a clean slate for the joint stage.
        reinitialize_trainable(nd.adj, 0.5);
        adj = train_stage(std::move(nd.adj), stage::kTrainJoint, GradientTarget::IntraAndInter,
                          true);
    } else {
        adj = train_stage(std::move(adj), stage::kTrainSingle, GradientTarget::IntraAndInter,
                          true);

        NodeDropoutResult nd = runner.run(stage::kNodeDropout, [&] {
            return node_dropout(adj, cfg.node_dropout_rate);
        });
        plan.dropped_nodes = nd.dropped;
        runner.checkpoint(stage::kNodeDropout, nd.adj);
        int dropped_total = 0;
        for (const auto& r : nd.dropped) dropped_total += int(r.size());
        runner.log(std::string(stage::kNodeDropout) + ": dropped " +
                   std::to_string(dropped_total) + " node slots across " +
                   std::to_string(nd.dropped.size()) + " rounds");
        adj = std::move(nd.adj); // no reinit, no retrain: the ablation
    }

    EdgeDropoutResult ed = runner.run(stage::kEdgeDropout, [&] {
        return edge_dropout(adj, cfg.edge_dropout_rate);
    });
    plan.dropped_edges = ed.dropped;
    plan.final_adjacency = std::move(ed.adj);
    runner.checkpoint(stage::kEdgeDropout, plan.final_adjacency);
    runner.log(std::string(stage::kEdgeDropout) + ": dropped " +
               std::to_string(plan.dropped_edges.size()) + " edges");
    return plan;
}

DropoutPlan run_pipeline(const TeamSpec& team, AgentBackend& backend,
                         const std::vector<TaskInstance>& train_instances,
                         const TaskKindSpec& kind, AggregationMode mode, const TrainConfig& cfg,
                         InterShape inter_shape, TrainStrategy strategy, int parallelism,
                         const PipelineHooks& hooks) {
    UtilityEvaluator evaluate =
        make_rollout_evaluator(team, backend, train_instances, kind, mode, parallelism);
    return run_pipeline(team, evaluate, cfg, inter_shape, strategy, hooks);
}

} // namespace commdrop
