#pragma once

#include <functional>
#include <string>
#include <vector>

#include "commdrop/dropout.hpp"
#include "commdrop/train.hpp"

namespace commdrop {

// TwoStage is the full method: train intra matrices, drop nodes, reinitialize
// the surviving matrices and train intra + inter jointly under nuclear-norm
// regularization, then drop edges. SingleStage is the ablation: one joint
// training pass, then both dropouts directly.
enum class TrainStrategy { TwoStage, SingleStage };

// Stage labels as they appear in traces, checkpoints and errors.
namespace stage {
inline constexpr const char* kInit = "init";
inline constexpr const char* kTrainIntra = "stage1_intra";
inline constexpr const char* kNodeDropout = "node_dropout";
inline constexpr const char* kTrainJoint = "stage2_joint";
inline constexpr const char* kTrainSingle = "single_joint";
inline constexpr const char* kEdgeDropout = "edge_dropout";
} // namespace stage

struct PipelineHooks {
    StepSink step_sink; // per training step
    // Called after each stage completes with its label and the matrices at
    // that point; returns the checkpoint path (named in stage errors).
    std::function<std::string(const std::string& stage, const AdjacencySet&)> checkpoint_sink;
    std::function<void(const std::string& line)> stage_log; // one summary line per stage
};

// Runs the full dropout pipeline and returns the plan (per-round dropped
// nodes, dropped edges, final trained adjacency). Any stage failure is
// rethrown as PipelineError naming the stage and the last checkpoint.
DropoutPlan run_pipeline(const TeamSpec& team, AgentBackend& backend,
                         const std::vector<TaskInstance>& train_instances,
                         const TaskKindSpec& kind, AggregationMode mode, const TrainConfig& cfg,
                         InterShape inter_shape = InterShape::UpperTriangular,
                         TrainStrategy strategy = TrainStrategy::TwoStage, int parallelism = 1,
                         const PipelineHooks& hooks = {});

// Same pipeline against an injected evaluator (tests, custom objectives).
DropoutPlan run_pipeline(const TeamSpec& team, const UtilityEvaluator& evaluate,
                         const TrainConfig& cfg,
                         InterShape inter_shape = InterShape::UpperTriangular,
                         TrainStrategy strategy = TrainStrategy::TwoStage,
                         const PipelineHooks& hooks = {});

} // namespace commdrop
