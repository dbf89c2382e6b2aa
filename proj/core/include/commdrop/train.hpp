#pragma once

#include <functional>
#include <string>
#include <vector>

#include "commdrop/adjacency.hpp"
#include "commdrop/graph_sample.hpp"
#include "commdrop/rollout.hpp"

namespace commdrop {

enum class GradientTarget { IntraOnly, IntraAndInter };
enum class Baseline { None, BatchMean };

struct TrainConfig {
    int steps = 10;             // ascent steps per training stage (K)
    int samples_per_step = 10;  // graphs drawn per step (M)
    double learning_rate = 0.1;
    double node_dropout_rate = 0.2; // alpha
    double edge_dropout_rate = 0.2; // beta
    double nuclear_coefficient = 0.1; // lambda
    Baseline baseline = Baseline::None;
    LikelihoodMode likelihood = LikelihoodMode::Paper;
    uint64_t seed = 0;

    void validate() const; // throws ConfigError on out-of-range values
};

// Gradient of the expected-utility objective with respect to the adjacency
// weights; zeros everywhere outside the trainable masks (and everywhere in
// inter when target is IntraOnly).
struct GradientSet {
    std::vector<Matrix> intra;
    std::vector<Matrix> inter;
};

struct ScoredSample {
    GraphSample sample;
    double utility = 0.0;
};

// REINFORCE estimate: mean over samples of (utility - b) * dlogp/dW, with b
// the batch mean utility under Baseline::BatchMean and 0 otherwise. In Paper
// likelihood mode only included edges contribute (1/w per edge); Bernoulli
// mode adds -(1/(1-w)) for every trainable pair that was order-compatible but
// excluded. Utilities must lie in [0, 1].
GradientSet estimate_policy_gradient(const AdjacencySet& adj,
                                     const std::vector<ScoredSample>& batch,
                                     GradientTarget target, const TrainConfig& cfg);

// Per-step stats delivered to the trace sink.
struct StepStats {
    int step = 0;                 // 1-based within the stage
    std::string stage;
    double mean_utility = 0.0;
    std::vector<double> intra_nuclear_norms;
    std::vector<double> inter_nuclear_norms;
    double wall_time_ms = 0.0;    // summed rollout wall time for the step
};
using StepSink = std::function<void(const StepStats&)>;

struct SampleScore {
    double utility = 0.0;
    double wall_time_ms = 0.0;
};
// Scores one sampled graph (mean utility over the training batch).
using UtilityEvaluator = std::function<SampleScore(const GraphSample&, int step, int m)>;

// K steps of stochastic ascent: draw M graphs, score each, apply the policy
// gradient with step size learning_rate; with regularize also descend
// nuclear_coefficient * d||W||_* (thin-SVD subgradient) per matrix. Trainable
// entries are clipped to [kEpsilonClip, 1 - kEpsilonClip] after every step.
// Deterministic given (adj, cfg.seed, stage_label).
AdjacencySet train_matrices(AdjacencySet adj, const UtilityEvaluator& evaluate,
                            const TrainConfig& cfg, GradientTarget target, bool regularize,
                            const std::string& stage_label, const StepSink& sink = {});

// Production evaluator: mean utility of a sampled graph over `instances` via
// full rollouts. Rollouts whose final round is empty score 0 instead of
// aborting the run; backend errors propagate. Runs instances concurrently up
// to `parallelism`.
UtilityEvaluator make_rollout_evaluator(const TeamSpec& team, AgentBackend& backend,
                                        const std::vector<TaskInstance>& instances,
                                        const TaskKindSpec& kind, AggregationMode mode,
                                        int parallelism);

// Convenience wrapper: trains against rollouts, as run_pipeline does.
AdjacencySet train_matrices(AdjacencySet adj, const TeamSpec& team, AgentBackend& backend,
                            const std::vector<TaskInstance>& instances, const TaskKindSpec& kind,
                            AggregationMode mode, const TrainConfig& cfg, GradientTarget target,
                            bool regularize, const std::string& stage_label,
                            const StepSink& sink = {}, int parallelism = 1);

} // namespace commdrop
