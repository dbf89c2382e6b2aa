#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace commdrop {

// Process exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2; // bad config, schema, or API contract
inline constexpr int kExitBackend = 3;    // agent backend failure
inline constexpr int kExitPipeline = 4;   // pipeline or rollout failure

struct TrainOptions {
    std::string config_path;
    std::optional<uint64_t> seed;      // overrides the config seed
    std::optional<std::string> output; // exact run directory (no hash subdir)
    std::optional<int> parallelism;
};

struct EvaluateOptions {
    std::string config_path;
    std::string plan_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> dataset; // evaluate on this whole file instead
                                        // of the config dataset's eval split
    std::optional<std::string> output;  // defaults to the plan's directory
    std::optional<int> parallelism;
    bool force = false; // evaluate despite a config_hash mismatch
};

struct InspectOptions {
    std::string plan_path;
};

// Trains the adjacency matrices, applies node and edge dropout, and writes
// init/stage/final checkpoints, trace.jsonl and plan.json into the run
// directory. Returns an exit code.
int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);

// Samples one inference graph from a plan's final adjacency and scores every
// evaluation instance over it; writes records.jsonl and report.json.
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);

// Prints a plan's survivors, drops and weight summaries after validating it
// against its final adjacency.
int cmd_inspect(const InspectOptions& opts, std::ostream& out, std::ostream& err);

} // namespace commdrop
